//! Twisted transfer operators `L_ξ w(x) = Σ_{σy=x} e^{u(y) − iξ f(y)} w(y)`,
//! with the leading eigenvalue curve and the drift variance read off from it.
//! Large frequencies are handled by a spectral-radius scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{integrate, GibbsData};
use crate::linalg::{eigenvalues, power_eigen, CMatrix, CVector};
use crate::sft::{CylinderFunction, Symbol, C64};

/// Sparse description of the twisted operator: entries `(row, col, e^{u}, f)`.
#[derive(Clone, Debug)]
pub struct TwistedOperator {
    dim: usize,
    entries: Vec<(usize, usize, f64, f64)>,
}

impl TwistedOperator {
    pub fn new(g: &GibbsData, f: &CylinderFunction) -> Result<Self> {
        let r = g.depth();
        if f.depth() > r + 1 {
            return Err(Error::invalid(format!(
                "f has depth {} but the working depth {r} only supports up to {}",
                f.depth(),
                r + 1
            )));
        }
        if !f.is_real(0.0) {
            return Err(Error::invalid("f must be real-valued"));
        }
        let spec = g.spec();
        let u = g.normalized_potential();
        let mut entries = Vec::new();
        let mut buf: Vec<Symbol> = Vec::with_capacity(r + 1);
        for (i, x) in g.words().iter().enumerate() {
            for a in spec.preimage_symbols(x) {
                buf.clear();
                buf.push(a);
                buf.extend_from_slice(x.symbols());
                let j = spec.rank_unchecked(&buf[..r]);
                entries.push((i, j, u.eval_re(spec, &buf).exp(), f.eval_re(spec, &buf)));
            }
        }
        Ok(TwistedOperator { dim: g.words().len(), entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, xi: f64) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(i, j, w, fv) in &self.entries {
            m[(i, j)] += C64::from_polar(w, -xi * fv);
        }
        m
    }
}

/// Matrix of `L_ξ` on functions of `g.depth()` coordinates.
pub fn twisted_matrix(g: &GibbsData, f: &CylinderFunction, xi: f64) -> Result<CMatrix> {
    Ok(TwistedOperator::new(g, f)?.matrix(xi))
}

/// Warm-start data for eigenvalue continuation in ξ.
#[derive(Clone, Debug)]
pub struct EigenHint {
    pub right: CVector,
    pub left: CVector,
    pub anchor: usize,
}

/// Leading spectral data of `L_ξ`.
#[derive(Clone, Debug)]
pub struct TwistedOperatorData {
    pub xi: f64,
    pub matrix: CMatrix,
    pub lambda: C64,
    pub right_vec: CVector,
    pub left_vec: CVector,
    pub subleading_radius: f64,
    pub anchor: usize,
}

impl TwistedOperatorData {
    pub fn hint(&self) -> EigenHint {
        EigenHint { right: self.right_vec.clone(), left: self.left_vec.clone(), anchor: self.anchor }
    }

    /// `P_ξ v = (left·v) right`.
    pub fn project(&self, v: &CVector) -> CVector {
        &self.right_vec * self.left_vec.dot(v)
    }
}

/// Relative separation below which the two leading moduli count as equal.
const GAP_TOL: f64 = 1e-10;

/// Leading eigenvalue, eigenvectors and subleading radius of `matrix`.
///
/// The right vector has 2-norm `√d` and is real positive at the anchor
/// entry (the hint's anchor when continuing, else the largest entry); the
/// left vector satisfies `left·right = 1`.
pub fn leading_eigen(matrix: &CMatrix, xi: f64, hint: Option<&EigenHint>) -> Result<TwistedOperatorData> {
    let d = matrix.nrows();
    let ev = eigenvalues(matrix)?;
    let leading = ev[0].norm();
    let next = ev.get(1).map_or(0.0, |z| z.norm());
    if d > 1 && leading - next <= GAP_TOL * leading {
        return Err(Error::GapCollapse { xi, leading, next });
    }
    let t = power_eigen(matrix, hint.map(|h| (&h.right, &h.left)))?;
    if (t.lambda - ev[0]).norm() > 1e-8 * leading.max(1e-300) {
        return Err(Error::NonConvergence(t.iterations));
    }
    let mut right = t.right;
    let mut left = t.left;
    let anchor = match hint {
        Some(h)
            if h.anchor < d && right[h.anchor].norm() > 1e-3 * right.iter().map(|z| z.norm()).fold(0.0, f64::max) =>
        {
            h.anchor
        }
        _ => {
            let max = right.iter().map(|z| z.norm()).fold(0.0, f64::max);
            right.iter().position(|z| z.norm() >= max * (1.0 - 1e-8)).unwrap_or(0)
        }
    };
    let a = right[anchor];
    let rot = a.conj() / a.norm();
    let scale = (d as f64).sqrt() / right.norm();
    right *= rot * scale;
    left /= rot * scale;
    Ok(TwistedOperatorData {
        xi,
        matrix: matrix.clone(),
        lambda: t.lambda,
        right_vec: right,
        left_vec: left,
        subleading_radius: next,
        anchor,
    })
}

/// Build `L_ξ` and extract its leading data.
pub fn twisted_data(op: &TwistedOperator, xi: f64, hint: Option<&EigenHint>) -> Result<TwistedOperatorData> {
    leading_eigen(&op.matrix(xi), xi, hint)
}

/// Drift variance by two independent routes, with the validated radius κ.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DriftVariance {
    pub omega_green_kubo: f64,
    pub omega_eigen: f64,
    pub kappa: f64,
    /// Finite-difference step set that produced `omega_eigen`.
    pub fd_steps: Vec<f64>,
    /// The two Richardson extrapolants of λ″(0) that were compared.
    pub richardson: [f64; 2],
}

impl DriftVariance {
    pub fn omega(&self) -> f64 {
        self.omega_green_kubo
    }
}

/// Green–Kubo sum `½(∫f² + 2 Σ_{n≥1} ∫ f·f∘σⁿ)`.
pub fn green_kubo(g: &GibbsData, f: &CylinderFunction) -> Result<f64> {
    let spec = g.spec();
    let depth = f.depth().max(g.depth());
    let fp = f.promote(spec, depth)?;
    let f2 = fp.map(|z| C64::new(z.re * z.re, 0.0));
    let c0 = integrate(g, &f2).re;
    let mut sum = 0.5 * c0;
    let mut w = g.transfer(f)?;
    let l0 = g.operator_matrix();
    let mut small = 0;
    for _ in 1..100_000 {
        let wp = w.promote(spec, depth)?;
        let prod =
            CylinderFunction::new(spec, depth, fp.values().iter().zip(wp.values()).map(|(a, b)| a * b).collect())?;
        let c = integrate(g, &prod).re;
        sum += c;
        if c.abs() <= 1e-16 * c0.abs() {
            small += 1;
            if small >= 3 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        let next: Vec<C64> =
            (0..w.values().len()).map(|i| (0..w.values().len()).map(|j| w.values()[j] * l0[(i, j)]).sum()).collect();
        w = CylinderFunction::new(spec, g.depth(), next)?;
    }
    Err(Error::NonConvergence(100_000))
}

fn check_mean_zero(g: &GibbsData, f: &CylinderFunction) -> Result<()> {
    let mean = integrate(g, f);
    if mean.norm() > 1e-12 {
        return Err(Error::invalid(format!("f must have zero mean, got {}", mean.re)));
    }
    Ok(())
}

/// Largest radius `κ ≤ 0.5/√ω`, found by halving, with gap margin above 0.1
/// and `|λ_ξ| < 1` on `0 < |ξ| ≤ κ`.
pub fn select_kappa(op: &TwistedOperator, omega: f64) -> Result<f64> {
    let mut kappa = 0.5 / omega.sqrt();
    for _ in 0..40 {
        let ok = (-32..=32).all(|k: i32| {
            let xi = kappa * k as f64 / 32.0;
            match eigenvalues(&op.matrix(xi)) {
                Ok(ev) => {
                    let lead = ev[0].norm();
                    let next = ev.get(1).map_or(0.0, |z| z.norm());
                    lead - next > 0.1 && (k == 0 || lead < 1.0)
                }
                Err(_) => false,
            }
        });
        if ok {
            return Ok(kappa);
        }
        kappa *= 0.5;
    }
    Err(Error::Degenerate("no perturbative radius found".into()))
}

/// λ along a list of frequencies, continuing eigenvectors from `ξ = 0`.
/// The list must start at 0 and move monotonically outward.
fn lambda_path(op: &TwistedOperator, xis: &[f64]) -> Result<Vec<TwistedOperatorData>> {
    let mut out: Vec<TwistedOperatorData> = Vec::with_capacity(xis.len());
    for &xi in xis {
        let hint = out.last().map(|d| d.hint());
        out.push(twisted_data(op, xi, hint.as_ref())?);
    }
    Ok(out)
}

/// Fourth-order central difference for λ″(0) at step `h`.
fn second_difference(op: &TwistedOperator, h: f64) -> Result<f64> {
    let plus = lambda_path(op, &[0.0, h, 2.0 * h])?;
    let minus = lambda_path(op, &[0.0, -h, -2.0 * h])?;
    let l0 = plus[0].lambda;
    let v = -plus[2].lambda + 16.0 * plus[1].lambda - 30.0 * l0 + 16.0 * minus[1].lambda - minus[2].lambda;
    Ok(v.re / (12.0 * h * h))
}

/// `−½ λ″(0)` with Richardson-extrapolated finite differences.
pub fn omega_from_eigenvalue(op: &TwistedOperator, kappa: f64) -> Result<(f64, Vec<f64>, [f64; 2])> {
    let mut base = 8.0;
    for _ in 0..6 {
        let steps = [kappa / base, kappa / (2.0 * base), kappa / (4.0 * base)];
        let d: Vec<f64> = steps.iter().map(|&h| second_difference(op, h)).collect::<Result<_>>()?;
        let r1 = (16.0 * d[1] - d[0]) / 15.0;
        let r2 = (16.0 * d[2] - d[1]) / 15.0;
        if (r1 - r2).abs() <= 1e-8 * r2.abs() {
            return Ok((-0.5 * r2, steps.to_vec(), [r1, r2]));
        }
        base *= 2.0;
    }
    Err(Error::Degenerate("finite-difference estimates of the eigenvalue curvature do not agree".into()))
}

/// Drift variance by the Green–Kubo sum and by the eigenvalue curvature.
pub fn drift_variance(g: &GibbsData, f: &CylinderFunction) -> Result<DriftVariance> {
    check_mean_zero(g, f)?;
    let gk = green_kubo(g, f)?;
    let scale = {
        let fp = f.promote(g.spec(), f.depth().max(1))?;
        integrate(g, &fp.map(|z| z * z)).re
    };
    if !(gk > 1e-12 * scale.max(1e-300)) {
        return Err(Error::Degenerate("zero drift variance: f is a coboundary".into()));
    }
    let op = TwistedOperator::new(g, f)?;
    let kappa = select_kappa(&op, gk)?;
    let (omega_eigen, fd_steps, richardson) = omega_from_eigenvalue(&op, kappa)?;
    Ok(DriftVariance { omega_green_kubo: gk, omega_eigen, kappa, fd_steps, richardson })
}

/// Result of scanning the spectral radius of `L_ξ` over `[κ, Ξ]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScanReport {
    pub kappa: f64,
    pub xi_max: f64,
    pub grid_points: usize,
    pub max_radius: f64,
    pub argmax_xi: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Refined local maxima `(ξ, radius)` in increasing ξ.
    pub local_maxima: Vec<(f64, f64)>,
    /// Grid samples `(ξ, radius)`.
    pub grid: Vec<(f64, f64)>,
}

pub const SCAN_THRESHOLD: f64 = 1.0 - 1e-6;

fn golden_max(func: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = func(c);
    let mut fd = func(d);
    for _ in 0..80 {
        if (b - a).abs() <= 1e-13 * b.abs().max(1.0) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = func(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = func(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Spectral radius of `L_ξ` on a grid over `[κ, Ξ]`, with each interior
/// local maximum refined by golden-section search.
pub fn aperiodicity_scan(
    g: &GibbsData,
    f: &CylinderFunction,
    kappa: f64,
    xi_max: f64,
    grid_points: usize,
) -> Result<ScanReport> {
    if !(kappa > 0.0 && xi_max > kappa) {
        return Err(Error::invalid("scan needs 0 < kappa < xi_max"));
    }
    if grid_points < 3 {
        return Err(Error::invalid("scan needs at least 3 grid points"));
    }
    let op = TwistedOperator::new(g, f)?;
    let radius = |xi: f64| eigenvalues(&op.matrix(xi)).map(|ev| ev[0].norm()).unwrap_or(f64::NAN);
    let step = (xi_max - kappa) / (grid_points - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..grid_points)
        .into_par_iter()
        .map(|i| {
            let xi = if i + 1 == grid_points { xi_max } else { kappa + step * i as f64 };
            (xi, radius(xi))
        })
        .collect();
    if grid.iter().any(|p| p.1.is_nan()) {
        return Err(Error::NonConvergence(10_000));
    }
    let brackets: Vec<usize> =
        (1..grid_points - 1).filter(|&i| grid[i].1 >= grid[i - 1].1 && grid[i].1 >= grid[i + 1].1).collect();
    let local_maxima: Vec<(f64, f64)> = brackets
        .par_iter()
        .map(|&i| {
            let (x, v) = golden_max(&radius, grid[i - 1].0, grid[i + 1].0);
            if v >= grid[i].1 {
                (x, v)
            } else {
                grid[i]
            }
        })
        .collect();
    let mut best = grid[0];
    for &p in grid.iter().chain(&local_maxima) {
        if p.1 > best.1 {
            best = p;
        }
    }
    Ok(ScanReport {
        kappa,
        xi_max,
        grid_points,
        max_radius: best.1,
        argmax_xi: best.0,
        threshold: SCAN_THRESHOLD,
        pass: best.1 < SCAN_THRESHOLD,
        local_maxima,
        grid,
    })
}

/// One row of a spectrum listing.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumRow {
    pub xi: f64,
    pub lambda: C64,
    pub subleading_radius: f64,
}

/// Leading eigenvalue (by modulus) and the next modulus on a uniform grid.
pub fn spectrum(
    g: &GibbsData,
    f: &CylinderFunction,
    xi_min: f64,
    xi_max: f64,
    points: usize,
) -> Result<Vec<SpectrumRow>> {
    if points == 0 || xi_max < xi_min {
        return Err(Error::invalid("spectrum needs points >= 1 and xi_min <= xi_max"));
    }
    let op = TwistedOperator::new(g, f)?;
    (0..points)
        .into_par_iter()
        .map(|i| {
            let xi = if points == 1 { xi_min } else { xi_min + (xi_max - xi_min) * i as f64 / (points - 1) as f64 };
            let ev = eigenvalues(&op.matrix(xi))?;
            Ok(SpectrumRow { xi, lambda: ev[0], subleading_radius: ev.get(1).map_or(0.0, |z| z.norm()) })
        })
        .collect()
}
