//! Large-`n` expansion of `∫ g(t)ⁿ v(t) dt` in half-integer powers of `n`.
//!
//! Write `g(t) = e^{−ωt²} e^{h(√ω t)}` with `h` vanishing to third order.
//! After the substitution `u = √ω t` the integrand becomes
//! `e^{−nu²} e^{n h(u)} ṽ(u)`, and the exponential of `n h` is replaced by a
//! truncated series. Every resulting monomial `nⁱ uʲ` integrates against the
//! Gaussian to `nⁱ n^{−(j+1)/2} Γ((j+1)/2)` when `j` is even, and to zero
//! otherwise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions, GaussLegendre};
use crate::sft::C64;

/// Taylor coefficients `a_j = f^{(j)}(0)/j!` for `j = 0..=order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorJet {
    pub coefficients: Vec<C64>,
}

impl TaylorJet {
    pub fn new(coefficients: Vec<C64>) -> Self {
        TaylorJet { coefficients }
    }

    pub fn from_real(coefficients: &[f64]) -> Self {
        TaylorJet { coefficients: coefficients.iter().map(|&v| C64::new(v, 0.0)).collect() }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn get(&self, j: usize) -> C64 {
        self.coefficients.get(j).copied().unwrap_or_default()
    }

    /// Jet of `e^{−ωt²}` to the given order.
    pub fn gaussian(omega: f64, order: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        let mut term = 1.0;
        for m in 0..=order / 2 {
            c[2 * m] = C64::new(term, 0.0);
            term *= -omega / (m as f64 + 1.0);
        }
        TaylorJet { coefficients: c }
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.coefficients.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * t + c)
    }
}

/// Sparse polynomial in `n` and `t`: `(i, j) ↦ a_{ij}` for `nⁱ tʲ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BivariatePoly {
    terms: BTreeMap<(usize, usize), C64>,
}

impl BivariatePoly {
    pub fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 0), C64::new(1.0, 0.0));
        BivariatePoly { terms }
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), C64> {
        &self.terms
    }

    fn add_term(&mut self, i: usize, j: usize, c: C64) {
        if c != C64::new(0.0, 0.0) {
            *self.terms.entry((i, j)).or_default() += c;
        }
    }

    /// Product keeping only monomials with `j − 2i ≤ max_excess`.
    fn mul_truncated(&self, other: &BivariatePoly, max_excess: i64) -> BivariatePoly {
        let mut out = BivariatePoly::default();
        for (&(i1, j1), &a) in &self.terms {
            for (&(i2, j2), &b) in &other.terms {
                let (i, j) = (i1 + i2, j1 + j2);
                if j as i64 - 2 * i as i64 <= max_excess {
                    out.add_term(i, j, a * b);
                }
            }
        }
        out
    }

    fn scaled(&self, s: f64) -> BivariatePoly {
        BivariatePoly { terms: self.terms.iter().map(|(&k, &v)| (k, v * s)).collect() }
    }

    fn add_assign(&mut self, other: &BivariatePoly) {
        for (&(i, j), &c) in &other.terms {
            self.add_term(i, j, c);
        }
    }

    /// Check `3i ≤ j` for every stored monomial.
    pub fn check_structure(&self) -> Result<()> {
        for &(i, j) in self.terms.keys() {
            if 3 * i > j {
                return Err(Error::Structure { i, j });
            }
        }
        Ok(())
    }
}

/// Coefficients `c₁, c₃, …, c_{2k−1}` of `∫ gⁿ v ≈ Σ c_j n^{−j/2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub k: usize,
    /// `coefficients[m]` is `c_{2m+1}`.
    pub coefficients: Vec<C64>,
    pub omega: f64,
}

impl ExpansionResult {
    /// `c_j` for odd `j`.
    pub fn c(&self, j: usize) -> C64 {
        assert!(j % 2 == 1, "only odd indices carry coefficients");
        self.coefficients.get((j - 1) / 2).copied().unwrap_or_default()
    }

    /// `Σ c_j n^{−j/2}`.
    pub fn evaluate(&self, n: f64) -> C64 {
        self.coefficients.iter().enumerate().map(|(m, &c)| c * n.powf(-((2 * m + 1) as f64) / 2.0)).sum()
    }
}

/// `Γ(m + ½)` for `m ≥ 0`.
pub fn gamma_half_integer(m: usize) -> f64 {
    let mut g = std::f64::consts::PI.sqrt();
    for l in 0..m {
        g *= l as f64 + 0.5;
    }
    g
}

/// Tolerance for the jet hypotheses `a₀ = 1`, `a₁ = 0`, `a₂ ∈ ℝ_{<0}`.
const HYPOTHESIS_TOL: f64 = 1e-8;

/// Jet orders required by [`expand`] for a given `k`.
pub fn required_order(k: usize) -> usize {
    2 * k + 6
}

/// Run the expansion algorithm to order `k`.
pub fn expand(g_jet: &TaylorJet, v_jet: &TaylorJet, k: usize) -> Result<ExpansionResult> {
    if k == 0 {
        return Err(Error::invalid("expansion order k must be at least 1"));
    }
    let need = required_order(k);
    for have in [g_jet.order(), v_jet.order()] {
        if have < need {
            return Err(Error::JetOrder { have, need });
        }
    }
    let a0 = g_jet.get(0);
    let a1 = g_jet.get(1);
    let a2 = g_jet.get(2);
    if (a0 - C64::new(1.0, 0.0)).norm() > HYPOTHESIS_TOL {
        return Err(Error::Hypothesis(format!("g(0) must be 1, got {a0}")));
    }
    if !(a2.re < 0.0) || a2.im.abs() > HYPOTHESIS_TOL * a2.norm() {
        return Err(Error::Hypothesis(format!("g''(0) must be real and negative, got {}", a2 * 2.0)));
    }
    if a1.norm() > HYPOTHESIS_TOL * (1.0 + a2.norm()) {
        return Err(Error::Hypothesis(format!("g'(0) must vanish, got {a1}")));
    }
    let omega = -a2.re;

    // Monomials n^i u^j with j − 2i ≤ 2k − 2 feed c_1..c_{2k−1} exactly.
    let excess = 2 * k - 2;
    let g_deg = excess + 2;
    let v_deg = excess;
    let rescale = |j: usize| omega.powf(-(j as f64) / 2.0);

    // (1) rescaled g-jet with the hypotheses imposed exactly.
    let mut g = vec![C64::new(0.0, 0.0); g_deg + 1];
    g[0] = C64::new(1.0, 0.0);
    g[2] = C64::new(-1.0, 0.0);
    for (j, gj) in g.iter_mut().enumerate().skip(3) {
        *gj = g_jet.get(j) * rescale(j);
    }
    let v: Vec<C64> = (0..=v_deg).map(|j| v_jet.get(j) * rescale(j)).collect();

    // (2) h = log g + u² via j·l_j = j·g_j − Σ_{i<j} i·l_i·g_{j−i}.
    let mut l = vec![C64::new(0.0, 0.0); g_deg + 1];
    for j in 1..=g_deg {
        let mut s = g[j] * j as f64;
        for i in 1..j {
            s -= l[i] * g[j - i] * i as f64;
        }
        l[j] = s / j as f64;
    }
    let mut h = l;
    h[0] = C64::new(0.0, 0.0);
    h[1] = C64::new(0.0, 0.0);
    h[2] = C64::new(0.0, 0.0);

    // (3) p_e(n·p_h(u))·p_v(u), truncated to the monomials that matter.
    let mut n_ph = BivariatePoly::default();
    for (d, &hd) in h.iter().enumerate().skip(3) {
        n_ph.add_term(1, d, hd);
    }
    let mut pv = BivariatePoly::default();
    for (j, &vj) in v.iter().enumerate() {
        pv.add_term(0, j, vj);
    }
    let mut exp_series = BivariatePoly::one();
    let mut power = BivariatePoly::one();
    let mut factorial = 1.0;
    for i in 1..=excess {
        power = power.mul_truncated(&n_ph, excess as i64);
        power.check_structure()?;
        factorial *= i as f64;
        exp_series.add_assign(&power.scaled(1.0 / factorial));
    }
    let poly = exp_series.mul_truncated(&pv, excess as i64);
    poly.check_structure()?;

    // (4)–(5) Gaussian moments, collected by half-integer power of n.
    let mut coefficients = vec![C64::new(0.0, 0.0); k];
    for (&(i, j), &a) in poly.terms() {
        if j % 2 == 1 {
            continue;
        }
        let e = j - 2 * i;
        coefficients[e / 2] += a * gamma_half_integer(j / 2);
    }

    // (6) undo the substitution u = √ω t.
    let s = omega.sqrt();
    coefficients.iter_mut().for_each(|c| *c /= s);
    Ok(ExpansionResult { k, coefficients, omega })
}

/// Accuracy controls for [`direct_integral_with`].
#[derive(Clone, Debug)]
pub struct DirectOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions { abs_tol: 1e-12, rel_tol: 0.0 }
    }
}

/// `∫_{−a}^{a} g(t)ⁿ v(t) dt` by adaptive Gauss–Legendre quadrature.
pub fn direct_integral<G, V>(g: G, v: V, halfwidth: f64, n: u64) -> Result<C64>
where
    G: Fn(f64) -> C64 + Sync,
    V: Fn(f64) -> C64 + Sync,
{
    direct_integral_with(g, v, halfwidth, n, &DirectOptions::default())
}

pub fn direct_integral_with<G, V>(g: G, v: V, halfwidth: f64, n: u64, opts: &DirectOptions) -> Result<C64>
where
    G: Fn(f64) -> C64 + Sync,
    V: Fn(f64) -> C64 + Sync,
{
    check_contracting(&g, halfwidth)?;
    let ln_g = |t: f64| g(t).ln();
    integrate_power(&ln_g, &v, halfwidth, n, opts)
}

/// As [`direct_integral_with`], but given `log g` directly. Supplying an
/// accurate logarithm avoids the `n·ε` relative error of raising a rounded
/// `g` to the `n`-th power.
pub fn direct_integral_log<L, V>(ln_g: L, v: V, halfwidth: f64, n: u64, opts: &DirectOptions) -> Result<C64>
where
    L: Fn(f64) -> C64 + Sync,
    V: Fn(f64) -> C64 + Sync,
{
    check_contracting(&|t: f64| ln_g(t).exp(), halfwidth)?;
    integrate_power(&ln_g, &v, halfwidth, n, opts)
}

fn check_contracting<G: Fn(f64) -> C64>(g: &G, halfwidth: f64) -> Result<()> {
    if !(halfwidth > 0.0) {
        return Err(Error::invalid("interval halfwidth must be positive"));
    }
    let m = 1000;
    for i in 0..=m {
        let t = -halfwidth + 2.0 * halfwidth * i as f64 / m as f64;
        let t = if 2 * i == m { 0.0 } else { t };
        let mag = g(t).norm();
        let bad = if t == 0.0 { mag > 1.0 + 1e-12 } else { mag >= 1.0 };
        if bad {
            return Err(Error::Hypothesis(format!("|g({t})| = {mag} violates |g| < 1 away from 0")));
        }
    }
    Ok(())
}

fn integrate_power<L, V>(ln_g: &L, v: &V, a: f64, n: u64, opts: &DirectOptions) -> Result<C64>
where
    L: Fn(f64) -> C64 + Sync,
    V: Fn(f64) -> C64 + Sync,
{
    let nf = n as f64;
    let f = |t: f64| if n == 0 { v(t) } else { (ln_g(t) * nf).exp() * v(t) };
    // Breakpoints refine dyadically toward the peak at 0, whose width is ~1/√n.
    let levels = if n == 0 { 0 } else { ((a * nf.sqrt()).log2().ceil().max(0.0) as usize + 3).min(60) };
    let mut pos: Vec<f64> = (0..=levels).map(|k| a * 0.5f64.powi(k as i32)).collect();
    pos.reverse();
    let mut bps: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    bps.push(0.0);
    bps.extend(pos);
    let rule = GaussLegendre::new(15);
    let aopts = AdaptiveOptions { abs_tol: opts.abs_tol, rel_tol: opts.rel_tol, ..Default::default() };
    Ok(integrate_adaptive(&f, &bps, &rule, &aopts)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_leading_coefficient() {
        let g = TaylorJet::gaussian(1.0, 12);
        let r =
            expand(&g, &TaylorJet::from_real(&[1.0; 1].iter().chain([0.0; 12].iter()).copied().collect::<Vec<_>>()), 1)
                .unwrap();
        assert!((r.c(1).re - std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn second_moment() {
        let g = TaylorJet::gaussian(1.0, 12);
        let mut v = vec![0.0; 13];
        v[2] = 1.0;
        let r = expand(&g, &TaylorJet::from_real(&v), 2).unwrap();
        assert!(r.c(1).norm() < 1e-15);
        assert!((r.c(3).re - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn general_omega_leading_term() {
        let omega = 2.7;
        let g = TaylorJet::gaussian(omega, 10);
        let mut v = vec![0.0; 11];
        v[0] = 1.3;
        let r = expand(&g, &TaylorJet::from_real(&v), 2).unwrap();
        assert!((r.c(1).re - (std::f64::consts::PI / omega).sqrt() * 1.3).abs() < 1e-14);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let v = TaylorJet::from_real(&[1.0; 9]);
        let mut g = TaylorJet::gaussian(1.0, 8);
        g.coefficients[0] = C64::new(1.1, 0.0);
        assert!(matches!(expand(&g, &v, 1), Err(Error::Hypothesis(_))));
        let g = TaylorJet::gaussian(-1.0, 8);
        assert!(matches!(expand(&g, &v, 1), Err(Error::Hypothesis(_))));
        let g = TaylorJet::gaussian(1.0, 7);
        assert!(matches!(expand(&g, &v, 1), Err(Error::JetOrder { .. })));
    }

    #[test]
    fn direct_integral_examples() {
        let g = |t: f64| C64::new((-t * t).exp(), 0.0);
        let one = |_t: f64| C64::new(1.0, 0.0);
        let v = direct_integral(g, one, 1.0, 100).unwrap();
        assert!((v.re - (std::f64::consts::PI / 100.0).sqrt()).abs() < 1e-10);
        let v0 = direct_integral(g, one, 0.7, 0).unwrap();
        assert!((v0.re - 1.4).abs() < 1e-14);
        let bad = |t: f64| C64::new(1.0 + t * t, 0.0);
        assert!(direct_integral(bad, one, 1.0, 10).is_err());
    }
}
