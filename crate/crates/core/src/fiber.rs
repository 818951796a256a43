//! Closed-form algebra of Gaussian–Hermite fiber functions.
//!
//! An atom is `c · H_j((t−m)/s) · exp(−(t−m)²/(2s²))` with `H_j` the
//! physicists' Hermite polynomial. Sums of atoms stay closed under
//! translation, multiplication by `t` and differentiation. Their integrals
//! and Fourier transforms are explicit, as are pairwise cross-correlations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::C64;

/// Largest Hermite index accepted from user input and from conjugation.
pub const MAX_HERMITE_INDEX: usize = 16;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// `H_0(x), …, H_n(x)`.
pub fn hermite_values(n: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(1.0);
    if n >= 1 {
        h.push(2.0 * x);
    }
    for k in 1..n {
        let next = 2.0 * x * h[k] - 2.0 * k as f64 * h[k - 1];
        h.push(next);
    }
    h
}

/// Monomial coefficients of `H_j(α + βz)` in `z`.
fn hermite_shifted_poly(j: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let mut prev = vec![1.0];
    if j == 0 {
        return prev;
    }
    let mut cur = vec![2.0 * alpha, 2.0 * beta];
    for k in 1..j {
        let mut next = vec![0.0; k + 2];
        for (d, &c) in cur.iter().enumerate() {
            next[d] += 2.0 * alpha * c;
            next[d + 1] += 2.0 * beta * c;
        }
        for (d, &c) in prev.iter().enumerate() {
            next[d] -= 2.0 * k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `(−i)^j`.
fn neg_i_pow(j: usize) -> C64 {
    match j % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// One Gaussian–Hermite term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub coeff: C64,
    pub index: usize,
    pub center: f64,
    pub width: f64,
}

impl Atom {
    pub fn eval(&self, t: f64) -> C64 {
        let u = (t - self.center) / self.width;
        let h = hermite_values(self.index, u)[self.index];
        self.coeff * (h * (-0.5 * u * u).exp())
    }

    pub fn integral(&self) -> C64 {
        if self.index % 2 == 1 {
            return C64::new(0.0, 0.0);
        }
        // ∫ H_{2k}(u) e^{−u²/2} du = √(2π)·(2k)!/k!
        let k = self.index / 2;
        let mut ratio = 1.0;
        for l in (k + 1)..=(2 * k) {
            ratio *= l as f64;
        }
        self.coeff * (self.width * SQRT_2PI * ratio)
    }

    /// `∫ atom(t) e^{−itξ} dt`.
    pub fn fourier(&self, xi: f64) -> C64 {
        let s = self.width;
        let h = hermite_values(self.index, s * xi)[self.index];
        self.coeff
            * neg_i_pow(self.index)
            * C64::from_polar(s * SQRT_2PI * h * (-0.5 * s * s * xi * xi).exp(), -self.center * xi)
    }
}

/// A finite sum of atoms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FiberSum {
    pub atoms: Vec<Atom>,
}

/// Centers and widths closer than this are treated as equal when merging.
pub const MERGE_TOL: f64 = 1e-12;

impl FiberSum {
    pub fn zero() -> Self {
        FiberSum { atoms: Vec::new() }
    }

    pub fn atom(coeff: C64, index: usize, center: f64, width: f64) -> Self {
        FiberSum { atoms: vec![Atom { coeff, index, center, width }] }
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.coeff == C64::new(0.0, 0.0))
    }

    pub fn max_index(&self) -> usize {
        self.atoms.iter().map(|a| a.index).max().unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.atoms.iter().map(|a| a.eval(t)).sum()
    }

    pub fn integral(&self) -> C64 {
        self.atoms.iter().map(|a| a.integral()).sum()
    }

    pub fn fourier(&self, xi: f64) -> C64 {
        self.atoms.iter().map(|a| a.fourier(xi)).sum()
    }

    /// `ℓ`-th ξ-derivative of the Fourier transform, i.e. the transform of `(−it)^ℓ·w`.
    pub fn fourier_derivative(&self, xi: f64, l: usize) -> C64 {
        let mut w = self.clone();
        for _ in 0..l {
            w = w.times_t().scale(C64::new(0.0, -1.0));
        }
        w.fourier(xi)
    }

    pub fn scale(&self, c: C64) -> FiberSum {
        FiberSum { atoms: self.atoms.iter().map(|a| Atom { coeff: a.coeff * c, ..*a }).collect() }
    }

    pub fn add(&self, other: &FiberSum) -> FiberSum {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        FiberSum { atoms }.canonical()
    }

    pub fn sub(&self, other: &FiberSum) -> FiberSum {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// `t ↦ w(t + a)`.
    pub fn shift(&self, a: f64) -> FiberSum {
        FiberSum { atoms: self.atoms.iter().map(|x| Atom { center: x.center - a, ..*x }).collect() }
    }

    /// `t ↦ t·w(t)`, using `u·H_j = ½H_{j+1} + j·H_{j−1}`.
    pub fn times_t(&self) -> FiberSum {
        let mut atoms = Vec::new();
        for a in &self.atoms {
            atoms.push(Atom { coeff: a.coeff * a.center, ..*a });
            atoms.push(Atom { coeff: a.coeff * (0.5 * a.width), index: a.index + 1, ..*a });
            if a.index > 0 {
                atoms.push(Atom { coeff: a.coeff * (a.width * a.index as f64), index: a.index - 1, ..*a });
            }
        }
        FiberSum { atoms }.canonical()
    }

    /// `d/dt`, using `h_j' = j·h_{j−1} − ½·h_{j+1}` for `h_j = H_j e^{−u²/2}`.
    pub fn derivative(&self) -> FiberSum {
        let mut atoms = Vec::new();
        for a in &self.atoms {
            atoms.push(Atom { coeff: a.coeff * (-0.5 / a.width), index: a.index + 1, ..*a });
            if a.index > 0 {
                atoms.push(Atom { coeff: a.coeff * (a.index as f64 / a.width), index: a.index - 1, ..*a });
            }
        }
        FiberSum { atoms }.canonical()
    }

    /// Merge atoms with matching index, center and width; drop exact zeros;
    /// sort into a deterministic order.
    pub fn canonical(&self) -> FiberSum {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|x, y| {
            x.index.cmp(&y.index).then(x.width.total_cmp(&y.width)).then(x.center.total_cmp(&y.center))
        });
        let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match out.last_mut() {
                Some(b)
                    if b.index == a.index
                        && (b.width - a.width).abs() <= MERGE_TOL * b.width.abs().max(1.0)
                        && (b.center - a.center).abs() <= MERGE_TOL * b.center.abs().max(1.0) =>
                {
                    b.coeff += a.coeff
                }
                _ => out.push(a),
            }
        }
        out.retain(|a| a.coeff != C64::new(0.0, 0.0));
        FiberSum { atoms: out }
    }

    /// True when `self − other` has every merged coefficient below `tol`.
    pub fn approx_eq(&self, other: &FiberSum, tol: f64) -> bool {
        self.sub(other).atoms.iter().all(|a| a.coeff.norm() <= tol)
    }

    /// `∫ self(t + a)·conj(other(t)) dt` in closed form.
    pub fn cross_correlation(&self, other: &FiberSum, a: f64) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for x in &self.atoms {
            for y in &other.atoms {
                total += atom_cross(x, y, a);
            }
        }
        total
    }

    /// `sup_t max(1,|t|^p)·|w^{(l)}(t)|` over `l ≤ q`, with the grid spacing used.
    pub fn pq_norm(&self, p: u32, q: usize) -> (f64, f64) {
        if self.is_zero() {
            return (0.0, 0.0);
        }
        let mut best = 0.0f64;
        let mut resolution = f64::INFINITY;
        let mut d = self.clone();
        for l in 0..=q {
            if l > 0 {
                d = d.derivative();
            }
            let (v, res) = weighted_sup(&d, p);
            best = best.max(v);
            resolution = resolution.min(res);
        }
        (best, resolution)
    }
}

fn atom_cross(x: &Atom, y: &Atom, a: f64) -> C64 {
    let (s1, s2) = (x.width, y.width);
    let p = x.center - a;
    let q = y.center;
    let v1 = s1 * s1;
    let v2 = s2 * s2;
    let sigma2 = v1 * v2 / (v1 + v2);
    let sigma = sigma2.sqrt();
    let c = sigma2 * (p / v1 + q / v2);
    let pref = (-(p - q) * (p - q) / (2.0 * (v1 + v2))).exp();
    if pref == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let px = hermite_shifted_poly(x.index, (c - p) / s1, sigma / s1);
    let py = hermite_shifted_poly(y.index, (c - q) / s2, sigma / s2);
    // ∫ z^k e^{−z²/2} dz = √(2π)(k−1)!! for even k.
    let deg = px.len() + py.len();
    let mut moments = vec![0.0; deg];
    let mut dfact = 1.0;
    for (k, m) in moments.iter_mut().enumerate() {
        if k % 2 == 0 {
            if k > 0 {
                dfact *= (k - 1) as f64;
            }
            *m = SQRT_2PI * dfact;
        }
    }
    let mut poly_integral = 0.0;
    for (i, &ci) in px.iter().enumerate() {
        for (j, &cj) in py.iter().enumerate() {
            poly_integral += ci * cj * moments[i + j];
        }
    }
    x.coeff * y.coeff.conj() * (pref * sigma * poly_integral)
}

/// Grid supremum of `max(1,|t|^p)|w(t)|` with golden-section polishing of the
/// best grid points. The window covers every atom out to the point where the
/// Gaussian envelope times the polynomial growth is negligible.
fn weighted_sup(w: &FiberSum, p: u32) -> (f64, f64) {
    let jmax = w.max_index() as f64;
    let smax = w.atoms.iter().map(|a| a.width).fold(0.0, f64::max);
    let smin = w.atoms.iter().map(|a| a.width).fold(f64::INFINITY, f64::min);
    let reach = (10.0 + (2.0 * jmax + 1.0).sqrt() + p as f64) * smax;
    let lo = w.atoms.iter().map(|a| a.center).fold(f64::INFINITY, f64::min) - reach;
    let hi = w.atoms.iter().map(|a| a.center).fold(f64::NEG_INFINITY, f64::max) + reach;
    let h = smin / 64.0;
    let count = (((hi - lo) / h).ceil() as usize).clamp(2, 2_000_000);
    let h = (hi - lo) / count as f64;
    let f = |t: f64| t.abs().powi(p as i32).max(1.0) * w.eval(t).norm();
    let values: Vec<f64> = (0..=count).map(|i| f(lo + h * i as f64)).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut best = values[order[0]];
    for &i in order.iter().take(4) {
        let t = lo + h * i as f64;
        let (mut a, mut b) = (t - h, t + h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) >= f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.max(f(0.5 * (a + b)));
    }
    (best, h)
}

/// Fiber functions accepted in configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FiberKind {
    /// `H_j(t)·e^{−t²/2}`.
    Hermite { index: usize },
    /// `e^{−(t−m)²/(2s²)}`.
    Gaussian { mean: f64, width: f64 },
}

/// A fiber function with a complex scale factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberBasisFn {
    #[serde(flatten)]
    pub kind: FiberKind,
    #[serde(default = "one")]
    pub scale_re: f64,
    #[serde(default)]
    pub scale_im: f64,
}

fn one() -> f64 {
    1.0
}

impl FiberBasisFn {
    pub fn hermite(index: usize) -> Self {
        FiberBasisFn { kind: FiberKind::Hermite { index }, scale_re: 1.0, scale_im: 0.0 }
    }

    pub fn gaussian(mean: f64, width: f64) -> Self {
        FiberBasisFn { kind: FiberKind::Gaussian { mean, width }, scale_re: 1.0, scale_im: 0.0 }
    }

    pub fn with_scale(mut self, c: C64) -> Self {
        self.scale_re = c.re;
        self.scale_im = c.im;
        self
    }

    pub fn scale(&self) -> C64 {
        C64::new(self.scale_re, self.scale_im)
    }

    pub fn to_fiber(&self) -> Result<FiberSum> {
        match self.kind {
            FiberKind::Hermite { index } => {
                if index > MAX_HERMITE_INDEX {
                    return Err(Error::invalid(format!("Hermite index {index} exceeds cap {MAX_HERMITE_INDEX}")));
                }
                Ok(FiberSum::atom(self.scale(), index, 0.0, 1.0))
            }
            FiberKind::Gaussian { mean, width } => {
                if !(width > 0.0) || !mean.is_finite() {
                    return Err(Error::invalid("Gaussian fiber needs finite mean and positive width"));
                }
                Ok(FiberSum::atom(self.scale(), 0, mean, width))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_real;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn gaussian_transform() {
        let w = FiberSum::atom(c(1.0), 0, 0.0, 1.0);
        for xi in [0.0, 0.5, 2.0] {
            assert!((w.fourier(xi) - c(SQRT_2PI * (-xi * xi / 2.0f64).exp())).norm() < 1e-15);
        }
    }

    #[test]
    fn transforms_match_quadrature() {
        let w = FiberSum {
            atoms: vec![
                Atom { coeff: C64::new(0.7, -0.2), index: 3, center: 0.4, width: 1.3 },
                Atom { coeff: c(1.0), index: 0, center: -1.0, width: 0.6 },
            ],
        };
        for xi in [-2.0, -0.3, 0.0, 1.1, 3.0] {
            let re = integrate_real(|t| (w.eval(t) * C64::from_polar(1.0, -t * xi)).re, -30.0, 30.0, 1e-14).unwrap();
            let im = integrate_real(|t| (w.eval(t) * C64::from_polar(1.0, -t * xi)).im, -30.0, 30.0, 1e-14).unwrap();
            assert!((w.fourier(xi) - C64::new(re, im)).norm() < 1e-10, "xi={xi}");
        }
        let int = integrate_real(|t| w.eval(t).re, -30.0, 30.0, 1e-14).unwrap();
        assert!((w.integral().re - int).abs() < 1e-11);
    }

    #[test]
    fn cross_correlation_matches_quadrature() {
        let x = FiberSum { atoms: vec![Atom { coeff: C64::new(1.0, 0.5), index: 2, center: 0.3, width: 0.8 }] };
        let y = FiberSum { atoms: vec![Atom { coeff: C64::new(0.4, -1.0), index: 1, center: -0.2, width: 1.5 }] };
        for a in [-1.5, 0.0, 0.7] {
            let f = |t: f64| x.eval(t + a) * y.eval(t).conj();
            let re = integrate_real(|t| f(t).re, -30.0, 30.0, 1e-14).unwrap();
            let im = integrate_real(|t| f(t).im, -30.0, 30.0, 1e-14).unwrap();
            assert!((x.cross_correlation(&y, a) - C64::new(re, im)).norm() < 1e-11, "a={a}");
        }
        let g = FiberSum::atom(c(1.0), 0, 0.0, 1.0);
        let v = g.cross_correlation(&g, 1.2);
        assert!((v.re - std::f64::consts::PI.sqrt() * (-0.36f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn derivative_and_multiplication() {
        let w = FiberSum { atoms: vec![Atom { coeff: c(0.9), index: 4, center: 0.5, width: 0.7 }] };
        let d = w.derivative();
        let tw = w.times_t();
        for t in [-1.0, 0.2, 1.7] {
            let num = (w.eval(t + 1e-6) - w.eval(t - 1e-6)) / 2e-6;
            assert!((d.eval(t) - num).norm() < 1e-6);
            assert!((tw.eval(t) - w.eval(t) * t).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_examples() {
        let g = FiberSum::atom(c(1.0), 0, 0.0, 1.0);
        assert!((g.pq_norm(0, 0).0 - 1.0).abs() < 1e-14);
        // max(1, t²)·e^{−t²/2} peaks at t = 0; the pure t² weight alone would peak at 2/e.
        assert!((g.pq_norm(2, 0).0 - 1.0).abs() < 1e-14);
        let t2 = g.times_t().times_t();
        assert!((t2.pq_norm(0, 0).0 - 2.0 / std::f64::consts::E).abs() < 1e-12);
    }
}
