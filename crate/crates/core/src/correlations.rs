//! Correlations `⟨r∘Fⁿ, s⟩` through the twisted transfer operators, and the
//! coefficients of their expansion in half-integer powers of `n`.
//!
//! With `φ_ξ = ŝ(ξ)` and `ψ_ξ = r̂(ξ)`,
//!
//! ```text
//! ⟨r∘Fⁿ, s⟩ = (1/2π) ∫ Σ_x μ(x) ψ_ξ(x) · conj((L_ξⁿ φ_ξ)(x)) dξ,
//! ```
//!
//! which is evaluated by composite Gauss–Legendre quadrature in `ξ` and by
//! repeated matrix–vector products for `L_ξⁿ φ_ξ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{expand, required_order, ExpansionResult, TaylorJet};
use crate::chebyshev::{check_points, lobatto_nodes, Chebyshev, DEFAULT_NODES};
use crate::error::{Error, Result, StageExt};
use crate::gibbs::GibbsData;
use crate::linalg::CVector;
use crate::observables::Observable;
use crate::oracle::{mc_correlation, oracle_correlation, OracleBudget};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, GaussLegendre};
use crate::sft::{d_theta, CylinderFunction, SubshiftSpec, Word, C64};
use crate::twisted::{
    aperiodicity_scan, drift_variance, twisted_data, DriftVariance, EigenHint, ScanReport, TwistedOperator,
    TwistedOperatorData,
};
use crate::window::Window;

/// What to do when the aperiodicity scan fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanPolicy {
    /// Refuse to compute spectral correlations.
    Enforce,
    /// Record the failure and continue.
    Report,
}

/// Frequency quadrature controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// The integral runs over `[−xi_max, xi_max]`.
    pub xi_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Gauss–Legendre points per panel.
    pub rule_points: usize,
    /// Panels inside `|ξ| ≤ 4/√(ωn)`.
    pub core_panels: usize,
    pub max_panels: usize,
    /// Grid size of the aperiodicity scan over `[κ, xi_max]`.
    pub scan_points: usize,
    pub scan_policy: ScanPolicy,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            xi_max: 20.0,
            abs_tol: 1e-15,
            rel_tol: 0.0,
            rule_points: 15,
            core_panels: 8,
            max_panels: 400_000,
            scan_points: 2001,
            scan_policy: ScanPolicy::Enforce,
        }
    }
}

/// Everything the spectral method needs that does not depend on `r`, `s` or `n`.
#[derive(Clone, Debug)]
pub struct SpectralSetup {
    g: GibbsData,
    f: CylinderFunction,
    op: TwistedOperator,
    drift: DriftVariance,
    scan: ScanReport,
    quad: QuadratureSpec,
    rule: GaussLegendre,
}

/// One spectrally computed correlation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralValue {
    pub value: C64,
    pub error_estimate: f64,
    pub panels: usize,
    pub evaluations: usize,
}

/// Iterates below this fraction of the starting vector are treated as zero.
const UNDERFLOW: f64 = 1e-40;

fn sup_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl SpectralSetup {
    /// Compute the drift variance, the radius κ and the scan over `[κ, Ξ]`.
    pub fn new(g: &GibbsData, f: &CylinderFunction, quad: &QuadratureSpec) -> Result<Self> {
        if !(quad.xi_max > 0.0) || quad.rule_points < 2 || quad.core_panels == 0 {
            return Err(Error::invalid("quadrature needs xi_max > 0, rule_points >= 2, core_panels >= 1"));
        }
        let drift = drift_variance(g, f).stage("drift")?;
        let scan =
            aperiodicity_scan(g, f, drift.kappa, quad.xi_max.max(2.0 * drift.kappa), quad.scan_points).stage("scan")?;
        if quad.scan_policy == ScanPolicy::Enforce && !scan.pass {
            return Err(Error::ScanFailed { max_radius: scan.max_radius, argmax_xi: scan.argmax_xi }.at_stage("scan"));
        }
        let op = TwistedOperator::new(g, f)?;
        Ok(SpectralSetup {
            g: g.clone(),
            f: f.clone(),
            op,
            drift,
            scan,
            quad: quad.clone(),
            rule: GaussLegendre::new(quad.rule_points),
        })
    }

    /// The same setup with a caller-chosen perturbative radius.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.drift.kappa = kappa;
        self
    }

    pub fn gibbs(&self) -> &GibbsData {
        &self.g
    }

    pub fn f(&self) -> &CylinderFunction {
        &self.f
    }

    pub fn drift(&self) -> &DriftVariance {
        &self.drift
    }

    pub fn omega(&self) -> f64 {
        self.drift.omega()
    }

    pub fn kappa(&self) -> f64 {
        self.drift.kappa
    }

    pub fn scan(&self) -> &ScanReport {
        &self.scan
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn operator(&self) -> &TwistedOperator {
        &self.op
    }

    fn check_observable(&self, o: &Observable, name: &str) -> Result<()> {
        if o.past() > 0 {
            return Err(Error::invalid(format!("{name} depends on past coordinates")));
        }
        if o.future() > self.g.depth() {
            return Err(Error::invalid(format!(
                "{name} has depth {} beyond the working depth {}",
                o.future(),
                self.g.depth()
            )));
        }
        if o.table().values().len() as u128 != self.g.spec().word_count(o.future()) {
            return Err(Error::invalid(format!("{name} was built for a different subshift")));
        }
        Ok(())
    }

    /// `ŝ(ξ)` (or its `l`-th derivative) on the words of the working depth.
    pub fn transform_vector(&self, o: &Observable, xi: f64, l: usize) -> CVector {
        let spec = self.g.spec();
        CVector::from_iterator(
            self.g.words().len(),
            self.g.words().iter().map(|w| o.fiber_at(spec, w.symbols(), 0).fourier_derivative(xi, l)),
        )
    }

    /// `L_ξⁿ v` by repeated products, stopping early once the iterate underflows.
    pub fn apply_power(&self, xi: f64, v: &CVector, n: usize) -> CVector {
        self.power(xi, v, n, UNDERFLOW)
    }

    fn power(&self, xi: f64, v: &CVector, n: usize, underflow: f64) -> CVector {
        let m = self.op.matrix(xi);
        let start = sup_norm(v);
        let mut cur = v.clone();
        let mut next = CVector::zeros(v.len());
        for step in 0..n {
            m.mul_to(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if step % 16 == 15 && sup_norm(&cur) <= underflow * start {
                return CVector::zeros(v.len());
            }
        }
        cur
    }

    /// `Σ_x μ(x) ψ_ξ(x) conj((L_ξⁿ φ_ξ)(x))`.
    fn integrand(&self, r: &Observable, s: &Observable, n: usize, xi: f64) -> C64 {
        let phi = self.transform_vector(s, xi, 0);
        let psi = self.transform_vector(r, xi, 0);
        let v = self.apply_power(xi, &phi, n);
        self.g.measures().iter().zip(psi.iter().zip(v.iter())).map(|(&m, (p, w))| *p * w.conj() * m).sum()
    }

    /// Panel layout for a given `n`: uniform panels across the central peak,
    /// dyadic growth outward, and clusters around scan maxima whose radius
    /// still matters after `n` steps.
    pub fn breakpoints(&self, n: usize) -> Vec<f64> {
        let xi_max = self.quad.xi_max;
        let core = (4.0 / (self.omega() * n.max(1) as f64).sqrt()).min(xi_max);
        let k = self.quad.core_panels;
        let mut pts: Vec<f64> = (0..=k).map(|i| core * i as f64 / k as f64).collect();
        let mut x = core;
        while 2.0 * x < xi_max {
            x *= 2.0;
            pts.push(x);
        }
        pts.push(xi_max);
        let step = core / k as f64;
        for &(peak, radius) in &self.scan.local_maxima {
            if (n as f64) * radius.ln() > -40.0 {
                for i in -(2 * k as i64)..=(2 * k as i64) {
                    let p = peak + step * i as f64;
                    if p > 0.0 && p < xi_max {
                        pts.push(p);
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * xi_max);
        let mut all: Vec<f64> = pts.iter().rev().filter(|&&p| p > 0.0).map(|&p| -p).collect();
        all.extend(pts);
        all
    }

    /// `⟨r∘Fⁿ, s⟩` by the spectral method.
    pub fn correlation(&self, r: &Observable, s: &Observable, n: usize) -> Result<SpectralValue> {
        self.check_observable(r, "r")?;
        self.check_observable(s, "s")?;
        if r.is_zero() || s.is_zero() {
            return Ok(SpectralValue { value: C64::new(0.0, 0.0), error_estimate: 0.0, panels: 0, evaluations: 0 });
        }
        let opts = AdaptiveOptions {
            abs_tol: self.quad.abs_tol,
            rel_tol: self.quad.rel_tol,
            max_panels: self.quad.max_panels,
            max_levels: 60,
            parallel: true,
            // each product with L_ξ adds a rounding error of order ε
            rel_noise: (n as f64 + 1.0) * f64::EPSILON,
        };
        let f = |xi: f64| self.integrand(r, s, n, xi);
        let res = integrate_adaptive(&f, &self.breakpoints(n), &self.rule, &opts).stage("quadrature")?;
        Ok(SpectralValue {
            value: res.value / (2.0 * PI),
            error_estimate: res.error_estimate / (2.0 * PI),
            panels: res.panels,
            evaluations: res.evaluations,
        })
    }

    /// `sup_{κ ≤ |ξ| ≤ Ξ} ‖L_ξⁿ φ_ξ‖∞` over the scan grid and its refined maxima.
    pub fn large_frequency_sup(&self, s: &Observable, n: usize) -> Result<f64> {
        self.check_observable(s, "s")?;
        let mut xis: Vec<f64> = self.scan.grid.iter().map(|p| p.0).collect();
        xis.extend(self.scan.local_maxima.iter().map(|p| p.0));
        let neg: Vec<f64> = xis.iter().map(|x| -x).collect();
        xis.extend(neg);
        let sups: Vec<f64> =
            xis.par_iter().map(|&xi| sup_norm(&self.power(xi, &self.transform_vector(s, xi, 0), n, 0.0))).collect();
        Ok(sups.into_iter().fold(0.0, f64::max))
    }
}

/// `⟨r∘Fⁿ, s⟩` by the spectral method, building the setup on the fly.
pub fn spectral_correlation(
    g: &GibbsData,
    f: &CylinderFunction,
    r: &Observable,
    s: &Observable,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<C64> {
    Ok(SpectralSetup::new(g, f, quad)?.correlation(r, s, n)?.value)
}

/// How a correlation series was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    Oracle,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::Oracle => "oracle",
            Method::MonteCarlo => "mc",
        }
    }
}

/// Provenance recorded with a series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub omega: f64,
    pub kappa: Option<f64>,
    pub xi_max: Option<f64>,
    /// Per-`n` quadrature error estimates or Monte Carlo standard errors.
    pub errors: Vec<f64>,
    pub panels: Vec<usize>,
    pub seed: Option<u64>,
}

/// Correlations `⟨r∘Fⁿ, s⟩` for a list of `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub n_values: Vec<usize>,
    pub values: Vec<C64>,
    pub method: Method,
    pub metadata: SeriesMetadata,
}

impl CorrelationSeries {
    pub fn is_empty(&self) -> bool {
        self.n_values.is_empty()
    }
}

/// Spectral correlations for every `n` in `ns`.
pub fn spectral_series(
    setup: &SpectralSetup,
    r: &Observable,
    s: &Observable,
    ns: &[usize],
) -> Result<CorrelationSeries> {
    let vals: Vec<SpectralValue> = ns.par_iter().map(|&n| setup.correlation(r, s, n)).collect::<Result<_>>()?;
    Ok(CorrelationSeries {
        n_values: ns.to_vec(),
        values: vals.iter().map(|v| v.value).collect(),
        method: Method::Spectral,
        metadata: SeriesMetadata {
            omega: setup.omega(),
            kappa: Some(setup.kappa()),
            xi_max: Some(setup.quad.xi_max),
            errors: vals.iter().map(|v| v.error_estimate).collect(),
            panels: vals.iter().map(|v| v.panels).collect(),
            seed: None,
        },
    })
}

/// Exact word-sum correlations for every `n` in `ns`.
pub fn oracle_series(
    g: &GibbsData,
    f: &CylinderFunction,
    r: &Observable,
    s: &Observable,
    ns: &[usize],
    omega: f64,
    budget: &OracleBudget,
) -> Result<CorrelationSeries> {
    let fw = Window::from_cylinder(f);
    let values = ns.iter().map(|&n| oracle_correlation(g, &fw, r, s, n, budget)).collect::<Result<_>>()?;
    Ok(CorrelationSeries {
        n_values: ns.to_vec(),
        values,
        method: Method::Oracle,
        metadata: SeriesMetadata { omega, ..Default::default() },
    })
}

/// Monte Carlo correlations for every `n` in `ns`.
pub fn mc_series(
    g: &GibbsData,
    f: &CylinderFunction,
    r: &Observable,
    s: &Observable,
    ns: &[usize],
    omega: f64,
    budget: &OracleBudget,
) -> Result<CorrelationSeries> {
    let fw = Window::from_cylinder(f);
    let est = ns.iter().map(|&n| mc_correlation(g, &fw, r, s, n, budget)).collect::<Result<Vec<_>>>()?;
    Ok(CorrelationSeries {
        n_values: ns.to_vec(),
        values: est.iter().map(|e| e.estimate).collect(),
        method: Method::MonteCarlo,
        metadata: SeriesMetadata {
            omega,
            errors: est.iter().map(|e| e.stderr).collect(),
            seed: Some(budget.rng_seed),
            ..Default::default()
        },
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Expansion coefficients with their provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub k: usize,
    /// `coefficients[m]` is `c_{2m+1}`.
    pub coefficients: Vec<C64>,
    /// `ν(r)·conj(ν(s)) / (2√(πω))`.
    pub c1_closed_form: C64,
    pub omega: f64,
    /// Half-width of the interval on which the jets were interpolated.
    pub jet_halfwidth: f64,
    pub interpolation_residual: f64,
    /// Taylor jet of `λ_ξ` at 0.
    pub lambda_jet: Vec<C64>,
}

impl ExpansionReport {
    pub fn c(&self, j: usize) -> C64 {
        assert!(j % 2 == 1);
        self.coefficients.get((j - 1) / 2).copied().unwrap_or_default()
    }

    /// `Σ_{j ≤ 2m−1} c_j n^{−j/2}` using the first `m` coefficients.
    pub fn partial_sum(&self, n: f64, m: usize) -> C64 {
        self.coefficients.iter().take(m).enumerate().map(|(i, &c)| c * n.powf(-((2 * i + 1) as f64) / 2.0)).sum()
    }
}

/// Maximum interpolation residual tolerated for eigenvalue-curve jets.
pub const JET_RESIDUAL_TOL: f64 = 1e-11;

struct CurveSample {
    lambda: C64,
    b: Vec<C64>,
    hint: EigenHint,
}

fn curve_sample(
    setup: &SpectralSetup,
    r: &Observable,
    s: &Observable,
    xi: f64,
    hint: Option<&EigenHint>,
) -> Result<CurveSample> {
    let d: TwistedOperatorData = twisted_data(&setup.op, xi, hint)?;
    let phi = setup.transform_vector(s, xi, 0);
    let psi = setup.transform_vector(r, xi, 0);
    let p = d.project(&phi);
    let b = psi.iter().zip(p.iter()).map(|(a, v)| a.conj() * v).collect();
    Ok(CurveSample { lambda: d.lambda, b, hint: d.hint() })
}

/// Sample `λ_ξ` and `b_x(ξ)` at the Lobatto nodes, continuing outward from 0.
fn sample_nodes(setup: &SpectralSetup, r: &Observable, s: &Observable, nodes: &[f64]) -> Result<Vec<CurveSample>> {
    let mid = nodes.len() / 2;
    let centre = curve_sample(setup, r, s, nodes[mid], None)?;
    let walk = |idx: Vec<usize>| -> Result<Vec<(usize, CurveSample)>> {
        let mut out: Vec<(usize, CurveSample)> = Vec::with_capacity(idx.len());
        let mut hint = centre.hint.clone();
        for i in idx {
            let smp = curve_sample(setup, r, s, nodes[i], Some(&hint))?;
            hint = smp.hint.clone();
            out.push((i, smp));
        }
        Ok(out)
    };
    let (left, right) = rayon::join(|| walk((0..mid).rev().collect()), || walk((mid + 1..nodes.len()).collect()));
    let mut slots: Vec<Option<CurveSample>> = (0..nodes.len()).map(|_| None).collect();
    for (i, smp) in left?.into_iter().chain(right?) {
        slots[i] = Some(smp);
    }
    slots[mid] = Some(centre);
    Ok(slots.into_iter().map(|s| s.expect("every node sampled")).collect())
}

/// Chebyshev interpolants of `λ_ξ` and every `b_x` on `[−a, a]`, with the
/// largest residual at the interval midpoints.
fn interpolate_curves(
    setup: &SpectralSetup,
    r: &Observable,
    s: &Observable,
    a: f64,
) -> Result<(Chebyshev, Vec<Chebyshev>, f64)> {
    let nodes = lobatto_nodes(a, DEFAULT_NODES);
    let samples = sample_nodes(setup, r, s, &nodes)?;
    let d = setup.g.words().len();
    let lam = Chebyshev::from_lobatto(a, &samples.iter().map(|x| x.lambda).collect::<Vec<_>>())?;
    let bs: Vec<Chebyshev> = (0..d)
        .map(|x| Chebyshev::from_lobatto(a, &samples.iter().map(|smp| smp.b[x]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let checks = check_points(a, DEFAULT_NODES);
    let mid = nodes.len() / 2;
    let scale_b = samples.iter().flat_map(|smp| smp.b.iter().map(|z| z.norm())).fold(1.0, f64::max);
    let residuals: Vec<f64> = checks
        .par_iter()
        .enumerate()
        .map(|(k, &xi)| {
            // check point k lies between nodes k and k+1; continue from the one nearer 0
            let near = if k < mid { k + 1 } else { k };
            let smp = curve_sample(setup, r, s, xi, Some(&samples[near].hint))?;
            let mut res = (lam.eval(xi) - smp.lambda).norm();
            for (x, cb) in bs.iter().enumerate() {
                res = res.max((cb.eval(xi) - smp.b[x]).norm() / scale_b);
            }
            Ok(res)
        })
        .collect::<Result<_>>()?;
    Ok((lam, bs, residuals.into_iter().fold(0.0, f64::max)))
}

/// Coefficients `c₁, c₃, …, c_{2k−1}` of `⟨r∘Fⁿ, s⟩ ≈ Σ c_j n^{−j/2}`.
pub fn expansion_coefficients(
    setup: &SpectralSetup,
    r: &Observable,
    s: &Observable,
    k: usize,
) -> Result<ExpansionReport> {
    setup.check_observable(r, "r")?;
    setup.check_observable(s, "s")?;
    let order = required_order(k);
    let mut a = setup.kappa();
    let mut attempt = 0;
    let (lam, bs, residual) = loop {
        let (lam, bs, residual) = interpolate_curves(setup, r, s, a)?;
        if residual < JET_RESIDUAL_TOL {
            break (lam, bs, residual);
        }
        attempt += 1;
        if attempt > 4 {
            return Err(Error::Degenerate(format!(
                "eigenvalue-curve interpolation residual {residual:.3e} exceeds {JET_RESIDUAL_TOL:.0e}"
            )));
        }
        a *= 0.5;
    };
    if lam.coeffs().len() < order + 1 {
        return Err(Error::JetOrder { have: lam.coeffs().len() - 1, need: order });
    }
    let lambda_jet = TaylorJet::new(lam.taylor(order));
    let per_word: Vec<ExpansionResult> =
        bs.iter().map(|cb| expand(&lambda_jet, &TaylorJet::new(cb.taylor(order)), k)).collect::<Result<_>>()?;
    let mu = setup.g.measures();
    let coefficients: Vec<C64> = (0..k)
        .map(|m| per_word.iter().zip(mu).map(|(res, &w)| res.coefficients[m].conj() * w).sum::<C64>() / (2.0 * PI))
        .collect();
    let omega = setup.omega();
    let nu_r = r.nu_integral(&setup.g)?;
    let nu_s = s.nu_integral(&setup.g)?;
    let c1_closed_form = nu_r * nu_s.conj() / (2.0 * (PI * omega).sqrt());
    Ok(ExpansionReport {
        k,
        coefficients,
        c1_closed_form,
        omega,
        jet_halfwidth: a,
        interpolation_residual: residual,
        lambda_jet: lambda_jet.coefficients,
    })
}

/// One row of the Krickeberg residual table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrickebergRow {
    pub n: usize,
    /// `2√(πωn)·corr(n)`.
    pub scaled: C64,
    /// `|2√(πωn)·corr(n) − limit|`.
    pub residual: f64,
}

/// Convergence of `2√(πωn)·corr(n)` to `ν(r)·conj(ν(s))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrickebergReport {
    pub limit: C64,
    pub rows: Vec<KrickebergRow>,
    pub slope: f64,
    pub pass: bool,
}

/// Accepted range of the fitted residual slope in [`krickeberg_check`].
pub const KRICKEBERG_SLOPE: (f64, f64) = (-1.3, -0.7);

/// Residual table and fitted log-log slope of `|2√(πωn)·corr(n) − limit|`,
/// with `ω` taken from the series metadata.
pub fn krickeberg_check(series: &CorrelationSeries, limit: C64) -> KrickebergReport {
    let omega = series.metadata.omega;
    let rows: Vec<KrickebergRow> = series
        .n_values
        .iter()
        .zip(&series.values)
        .map(|(&n, &v)| {
            let scaled = v * 2.0 * (PI * omega * n as f64).sqrt();
            KrickebergRow { n, scaled, residual: (scaled - limit).norm() }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let slope = loglog_slope(&xs, &ys);
    let (lo, hi) = KRICKEBERG_SLOPE;
    KrickebergReport { limit, rows, slope, pass: (lo..=hi).contains(&slope) }
}

/// The limit `ν(r)·conj(ν(s))` of the scaled correlations.
pub fn krickeberg_limit(g: &GibbsData, r: &Observable, s: &Observable) -> Result<C64> {
    Ok(r.nu_integral(g)? * s.nu_integral(g)?.conj())
}

/// Grid estimates of `H(φ, k)` and `M(φ, k)` for `φ_ξ = ŝ(ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothCurveBounds {
    pub k: usize,
    /// `sup_ξ max_{j≤k} ‖∂^j φ_ξ‖∞`.
    pub h: f64,
    /// `sup_ξ max_{j≤k} (‖∂^j φ_ξ‖∞ + |∂^j φ_ξ|_θ)`.
    pub m: f64,
    /// The Lipschitz part of `m`.
    pub lipschitz: f64,
}

fn lipschitz_seminorm(spec: &SubshiftSpec, words: &[Word], v: &CylinderFunction) -> Result<f64> {
    let mut best = 0.0f64;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            let diff = (v.eval(spec, words[i].symbols()) - v.eval(spec, words[j].symbols())).norm();
            if diff > 0.0 {
                best = best.max(diff / d_theta(spec, &words[i], &words[j])?);
            }
        }
    }
    Ok(best)
}

/// `H` and `M` of the curve `ξ ↦ ŝ(ξ)` sampled on `xis`, with Lipschitz
/// constants measured on words of length `depth`.
pub fn smooth_curve_bounds(
    spec: &SubshiftSpec,
    s: &Observable,
    xis: &[f64],
    k: usize,
    depth: usize,
) -> Result<SmoothCurveBounds> {
    if depth < s.future() {
        return Err(Error::invalid("depth must cover the observable"));
    }
    let words = spec.admissible_words(depth);
    let per_xi: Vec<(f64, f64, f64)> = xis
        .par_iter()
        .map(|&xi| {
            let mut h = 0.0f64;
            let mut m = 0.0f64;
            let mut lip = 0.0f64;
            for j in 0..=k {
                let v = s.fourier_derivative(spec, xi, j)?;
                let sup = v.max_abs();
                let l = lipschitz_seminorm(spec, &words, &v)?;
                h = h.max(sup);
                m = m.max(sup + l);
                lip = lip.max(l);
            }
            Ok((h, m, lip))
        })
        .collect::<Result<_>>()?;
    let (h, m, lipschitz) =
        per_xi.iter().fold((0.0f64, 0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)));
    Ok(SmoothCurveBounds { k, h, m, lipschitz })
}
