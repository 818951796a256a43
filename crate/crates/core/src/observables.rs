//! Observables `s(x, t) = Σ coeff(x)·fiber(t)` with locally constant
//! coefficients and Gaussian–Hermite fibers.
//!
//! Internally an observable is tabulated: every admissible word of its
//! coordinate window carries the fiber function `s_x` as a [`FiberSum`].
//! Term lists from configuration files are expanded into this table once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{FiberBasisFn, FiberSum};
use crate::gibbs::GibbsData;
use crate::sft::{d_theta, CylinderFunction, SubshiftSpec, Symbol, Word, C64};
use crate::window::{minimal_window, TwoSidedFunction, Window};

/// One configured term: a coefficient table and a fiber function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    #[serde(default)]
    pub coeff_past: usize,
    pub coeff_depth: usize,
    pub coeff_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_values_im: Option<Vec<f64>>,
    pub fiber: FiberBasisFn,
}

impl TermSpec {
    /// A term whose coefficient is the constant `c`.
    pub fn constant(c: f64, fiber: FiberBasisFn) -> Self {
        TermSpec { coeff_past: 0, coeff_depth: 0, coeff_values: vec![c], coeff_values_im: None, fiber }
    }

    pub fn coefficient(&self, spec: &SubshiftSpec) -> Result<TwoSidedFunction> {
        let values: Vec<C64> = match &self.coeff_values_im {
            None => self.coeff_values.iter().map(|&v| C64::new(v, 0.0)).collect(),
            Some(im) if im.len() == self.coeff_values.len() => {
                self.coeff_values.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect()
            }
            Some(_) => return Err(Error::invalid("coeff_values_im must match coeff_values in length")),
        };
        Window::new(spec, self.coeff_past, self.coeff_depth, values)
    }
}

/// Configuration form of an observable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub terms: Vec<TermSpec>,
}

/// A tabulated observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    table: Window<FiberSum>,
}

impl Observable {
    pub fn from_table(table: Window<FiberSum>) -> Self {
        Observable { table }
    }

    pub fn zero() -> Self {
        Observable { table: Window::constant(FiberSum::zero()) }
    }

    /// `1 × fiber`.
    pub fn constant(fiber: FiberSum) -> Self {
        Observable { table: Window::constant(fiber) }
    }

    /// Expand `Σ coeff_k(x)·fiber_k(t)` into a table on the union window.
    pub fn from_terms(spec: &SubshiftSpec, terms: &[(TwoSidedFunction, FiberSum)]) -> Self {
        let past = terms.iter().map(|t| t.0.past()).max().unwrap_or(0);
        let future = terms.iter().map(|t| t.0.future()).max().unwrap_or(0);
        let table = Window::from_fn(spec, past, future, |w| {
            let mut atoms = Vec::new();
            for (c, fib) in terms {
                let v = *c.at(spec, w, past);
                if v != C64::new(0.0, 0.0) {
                    atoms.extend(fib.scale(v).atoms);
                }
            }
            FiberSum { atoms }.canonical()
        });
        Observable { table }
    }

    pub fn from_spec(spec: &SubshiftSpec, s: &ObservableSpec) -> Result<Self> {
        let terms =
            s.terms.iter().map(|t| Ok((t.coefficient(spec)?, t.fiber.to_fiber()?))).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_terms(spec, &terms))
    }

    pub fn table(&self) -> &Window<FiberSum> {
        &self.table
    }

    pub fn past(&self) -> usize {
        self.table.past()
    }

    pub fn future(&self) -> usize {
        self.table.future()
    }

    /// Fiber `s_x` at a word covering coordinates `−word_past..`.
    pub fn fiber_at(&self, spec: &SubshiftSpec, word: &[Symbol], word_past: usize) -> &FiberSum {
        self.table.at(spec, word, word_past)
    }

    pub fn is_zero(&self) -> bool {
        self.table.values().iter().all(|f| f.is_zero())
    }

    /// Check that the table was built for `spec`.
    fn on(&self, spec: &SubshiftSpec) -> Result<&Self> {
        if self.table.values().len() as u128 != spec.word_count(self.table.width()) {
            return Err(Error::invalid("observable table does not match the subshift"));
        }
        Ok(self)
    }

    pub fn max_hermite_index(&self) -> usize {
        self.table.values().iter().map(|f| f.max_index()).max().unwrap_or(0)
    }

    fn require_one_sided(&self) -> Result<()> {
        if self.past() > 0 {
            return Err(Error::invalid(format!(
                "observable depends on {} past coordinates; reduce it first",
                self.past()
            )));
        }
        Ok(())
    }

    /// `x ↦ ŝ_x(ξ) = ∫ s_x(t) e^{−itξ} dt`.
    pub fn fourier_transform(&self, spec: &SubshiftSpec, xi: f64) -> Result<CylinderFunction> {
        self.fourier_derivative(spec, xi, 0)
    }

    /// `x ↦ ∂_ξ^ℓ ŝ_x(ξ)`.
    pub fn fourier_derivative(&self, spec: &SubshiftSpec, xi: f64, l: usize) -> Result<CylinderFunction> {
        self.require_one_sided()?;
        let this = self.on(spec)?;
        CylinderFunction::new(
            spec,
            this.future(),
            this.table.values().iter().map(|f| f.fourier_derivative(xi, l)).collect(),
        )
    }

    /// `ν(s) = ∫∫ s dμ dt`.
    pub fn nu_integral(&self, g: &GibbsData) -> Result<C64> {
        let spec = g.spec();
        let this = self.on(spec)?;
        let words = spec.admissible_words(this.table.width());
        Ok(words.iter().zip(this.table.values()).map(|(w, f)| f.integral() * g.cylinder_measure(w.symbols())).sum())
    }

    /// `sup_x ‖s_x‖_{p,q}` with the coarsest grid spacing used.
    pub fn pq_norm(&self, p: u32, q: usize) -> (f64, f64) {
        let parts: Vec<(f64, f64)> = self.table.values().par_iter().map(|f| f.pq_norm(p, q)).collect();
        parts.iter().fold((0.0, 0.0), |(v, r), &(pv, pr)| (v.max(pv), r.max(pr)))
    }

    /// `sup_{x≠y} ‖s_x − s_y‖_{p,q} / d_θ(x, y)` over words of length `depth`.
    pub fn theta_lipschitz_seminorm(&self, spec: &SubshiftSpec, p: u32, q: usize, depth: usize) -> Result<f64> {
        self.require_one_sided()?;
        let this = self.on(spec)?;
        if depth < this.future() {
            return Err(Error::invalid(format!("depth {depth} is below the coefficient depth {}", this.future())));
        }
        let words: Vec<Word> = spec.admissible_words(depth);
        let fibers: Vec<&FiberSum> = words.iter().map(|w| this.fiber_at(spec, w.symbols(), 0)).collect();
        let pairs: Vec<(usize, usize)> =
            (0..words.len()).flat_map(|i| (i + 1..words.len()).map(move |j| (i, j))).collect();
        let ratios: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let diff = fibers[i].sub(fibers[j]);
                if diff.is_zero() {
                    return Ok(0.0);
                }
                let d = d_theta(spec, &words[i], &words[j])?;
                Ok(diff.pq_norm(p, q).0 / d)
            })
            .collect::<Result<_>>()?;
        Ok(ratios.into_iter().fold(0.0, f64::max))
    }

    /// `(x, t) ↦ s(x, t − h(x))`.
    pub fn conjugate(&self, spec: &SubshiftSpec, h: &TwoSidedFunction) -> Result<Self> {
        let this = self.on(spec)?;
        let past = this.past().max(h.past());
        let future = this.future().max(h.future());
        let table =
            Window::from_fn(spec, past, future, |w| this.fiber_at(spec, w, past).shift(-h.at(spec, w, past).re));
        Ok(Observable { table })
    }

    /// `s ∘ Fⁿ`, i.e. `(x, t) ↦ s(σⁿx, t + S_n f(x))`.
    pub fn compose_skew(&self, spec: &SubshiftSpec, f: &TwoSidedFunction, n: usize) -> Result<Self> {
        let this = self.on(spec)?;
        let sn = f.birkhoff(spec, n);
        let past = this.past().saturating_sub(n).max(sn.past());
        let future = (this.future() + n).max(sn.future());
        let table =
            Window::from_fn(spec, past, future, |w| this.fiber_at(spec, w, past + n).shift(sn.at(spec, w, past).re));
        Ok(Observable { table })
    }

    /// `s ∘ ω` for a map that rewrites coordinates: `rewrite` receives a
    /// word on `[-past, future)` and returns the word on which `s` is read,
    /// on the window `[-read_past, ·)`.
    pub fn pull_back(
        &self,
        spec: &SubshiftSpec,
        past: usize,
        future: usize,
        read_past: usize,
        rewrite: impl Fn(&[Symbol]) -> Vec<Symbol>,
    ) -> Result<Self> {
        let this = self.on(spec)?;
        let table = Window::from_fn(spec, past, future, |w| this.fiber_at(spec, &rewrite(w), read_past).clone());
        Ok(Observable { table })
    }

    fn combine(&self, spec: &SubshiftSpec, other: &Self, sign: f64) -> Result<Self> {
        let a = self.on(spec)?;
        let b = other.on(spec)?;
        let past = a.past().max(b.past());
        let future = a.future().max(b.future());
        let table = Window::from_fn(spec, past, future, |w| {
            a.fiber_at(spec, w, past).add(&b.fiber_at(spec, w, past).scale(C64::new(sign, 0.0)))
        });
        Ok(Observable { table })
    }

    pub fn add(&self, spec: &SubshiftSpec, other: &Self) -> Result<Self> {
        self.combine(spec, other, 1.0)
    }

    pub fn sub(&self, spec: &SubshiftSpec, other: &Self) -> Result<Self> {
        self.combine(spec, other, -1.0)
    }

    pub fn scale(&self, c: C64) -> Self {
        Observable { table: self.table.map(|f| f.scale(c)) }
    }

    /// Largest fiber coefficient, used as the scale for merge tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        self.table.values().iter().flat_map(|f| f.atoms.iter().map(|a| a.coeff.norm())).fold(0.0, f64::max)
    }

    /// Restrict to the smallest window on which the table is determined,
    /// treating fibers that agree to `rel_tol` (relative to the largest
    /// coefficient) as equal.
    pub fn compress(&self, spec: &SubshiftSpec, rel_tol: f64) -> Result<Self> {
        let this = self.on(spec)?;
        let tol = rel_tol * this.coefficient_scale().max(f64::MIN_POSITIVE);
        Ok(Observable { table: minimal_window(spec, &this.table, |a, b| a.approx_eq(b, tol)) })
    }

    /// Fibers that agree to `rel_tol` on every word are treated as equal.
    pub fn approx_eq(&self, spec: &SubshiftSpec, other: &Self, rel_tol: f64) -> Result<bool> {
        let diff = self.sub(spec, other)?;
        let scale = self.coefficient_scale().max(other.coefficient_scale()).max(f64::MIN_POSITIVE);
        Ok(diff.table.values().iter().all(|f| f.atoms.iter().all(|a| a.coeff.norm() <= rel_tol * scale)))
    }

    /// `sup_{x,t} |s(x,t)|` of the difference, i.e. `‖·‖_{∞,0,0}`.
    pub fn sup_norm(&self) -> f64 {
        self.pq_norm(0, 0).0
    }
}
