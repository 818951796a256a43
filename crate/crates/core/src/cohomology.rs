//! Reduction of two-sided data to one-sided data.
//!
//! Everything here is locally constant, so the telescoping series that define
//! `v_m` are finite sums and the identities they satisfy hold exactly (up to
//! floating-point rounding).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::sft::{CylinderFunction, SubshiftSpec, Symbol, C64};
use crate::window::{minimal_window, TwoSidedFunction, Window};

/// Relative tolerance used when checking that a result no longer depends on
/// past coordinates.
pub const PAST_TOL: f64 = 1e-12;

/// A fixed admissible infinite past for each symbol.
///
/// The continuation of `a` is the lexicographically smallest admissible past
/// `… a_{−2} a_{−1}` ending in `a`, read from `a_{−1}` backwards. Each step
/// takes the smallest predecessor of the previous symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorChoice {
    smallest_predecessor: Vec<Symbol>,
}

impl AnchorChoice {
    pub fn lexicographic(spec: &SubshiftSpec) -> Result<Self> {
        let k = spec.alphabet_size();
        let smallest_predecessor = (0..k as Symbol)
            .map(|a| {
                (0..k as Symbol)
                    .find(|&b| spec.allowed(b, a))
                    .ok_or_else(|| Error::invalid(format!("symbol {a} has no predecessor")))
            })
            .collect::<Result<_>>()?;
        Ok(AnchorChoice { smallest_predecessor })
    }

    /// The `len` symbols before `a` in coordinate order `a_{−len} … a_{−1}`.
    pub fn continuation(&self, a: Symbol, len: usize) -> Vec<Symbol> {
        let mut out = vec![0; len];
        let mut cur = a;
        for slot in out.iter_mut().rev() {
            cur = self.smallest_predecessor[cur as usize];
            *slot = cur;
        }
        out
    }
}

/// `ω_n` on a word covering coordinates `−word_past..`: coordinates `≥ −n`
/// are kept and the earlier ones are replaced by the anchor continuation of
/// the symbol at `−n`.
pub fn omega_n(anchor: &AnchorChoice, n: usize, word: &[Symbol], word_past: usize) -> Result<Vec<Symbol>> {
    if word_past > word.len() {
        return Err(Error::invalid(format!("word of length {} cannot cover {word_past} past coordinates", word.len())));
    }
    if word_past <= n {
        return Ok(word.to_vec());
    }
    let idx = word_past - n;
    let mut out = anchor.continuation(word[idx], idx);
    out.extend_from_slice(&word[idx..]);
    Ok(out)
}

/// Window `[−n, q)` of `Ω_n` applied to something with window `[−p, q)`.
fn omega_window(n: usize, future: usize) -> (usize, usize) {
    // coordinate −n must lie inside the window
    (n, if n == 0 { future.max(1) } else { future })
}

/// `Ω_n f = f ∘ ω_n` for a scalar window function.
pub fn omega_n_function(
    spec: &SubshiftSpec,
    anchor: &AnchorChoice,
    n: usize,
    f: &TwoSidedFunction,
) -> TwoSidedFunction {
    let p = f.past();
    if p <= n {
        return f.clone();
    }
    let (past, future) = omega_window(n, f.future());
    Window::from_fn(spec, past, future, |w| {
        let mut full = anchor.continuation(w[0], p - n);
        full.extend_from_slice(w);
        *f.at(spec, &full, p)
    })
}

/// `Ω_n s = s ∘ ω_n` for an observable.
pub fn omega_n_observable(spec: &SubshiftSpec, anchor: &AnchorChoice, n: usize, s: &Observable) -> Result<Observable> {
    let p = s.past();
    if p <= n {
        return Ok(s.clone());
    }
    let (past, future) = omega_window(n, s.future());
    s.pull_back(spec, past, future, p, |w| {
        let mut full = anchor.continuation(w[0], p - n);
        full.extend_from_slice(w);
        full
    })
}

fn sub(spec: &SubshiftSpec, a: &TwoSidedFunction, b: &TwoSidedFunction) -> TwoSidedFunction {
    a.add(spec, &b.scale(C64::new(-1.0, 0.0)))
}

/// `v_m = Σ_{n≥m} (Ω_n f − f) ∘ σⁿ` for a scalar function, where the skew is
/// trivial. Terms with `n ≥ past` vanish, so the sum is finite.
pub fn build_vm_function(
    spec: &SubshiftSpec,
    f: &TwoSidedFunction,
    m: usize,
    anchor: &AnchorChoice,
) -> TwoSidedFunction {
    (m..f.past()).fold(Window::constant(C64::new(0.0, 0.0)), |acc, n| {
        let term = sub(spec, &omega_n_function(spec, anchor, n, f), f).compose_shift(spec, n);
        acc.add(spec, &term)
    })
}

/// `v_m = Σ_{n≥m} (Ω_n s − s) ∘ Fⁿ` for the skew product over a one-sided `f`.
pub fn build_vm(
    spec: &SubshiftSpec,
    s: &Observable,
    f: &CylinderFunction,
    m: usize,
    anchor: &AnchorChoice,
) -> Result<Observable> {
    let fw = Window::from_cylinder(f);
    let mut acc = Observable::zero();
    for n in m..s.past() {
        let term = omega_n_observable(spec, anchor, n, s)?.sub(spec, s)?.compose_skew(spec, &fw, n)?;
        acc = acc.add(spec, &term)?;
    }
    Ok(acc)
}

/// `s_m = s∘F^m + v_m − v_m∘F`, which depends only on future coordinates.
pub fn approximating_sequence(
    spec: &SubshiftSpec,
    s: &Observable,
    f: &CylinderFunction,
    m: usize,
    anchor: &AnchorChoice,
) -> Result<Observable> {
    let fw = Window::from_cylinder(f);
    let vm = build_vm(spec, s, f, m, anchor)?;
    let sm = s.compose_skew(spec, &fw, m)?.add(spec, &vm)?.sub(spec, &vm.compose_skew(spec, &fw, 1)?)?;
    let sm = sm.compress(spec, PAST_TOL)?;
    if sm.past() != 0 {
        return Err(Error::Degenerate(format!(
            "approximating sequence still depends on {} past coordinates",
            sm.past()
        )));
    }
    Ok(sm)
}

/// `f = f̃ + h − h∘σ` with `f̃` one-sided.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub f_tilde: CylinderFunction,
    pub h: TwoSidedFunction,
}

fn compress_scalar(spec: &SubshiftSpec, w: &TwoSidedFunction, reference: f64) -> TwoSidedFunction {
    let tol = PAST_TOL * reference.max(f64::MIN_POSITIVE);
    minimal_window(spec, w, |a, b| (a - b).norm() <= tol)
}

/// Split a two-sided `f` into a one-sided part and a coboundary.
///
/// With `v₀ = Σ_n (Ω_n f − f)∘σⁿ`, the function `f̃ = f + v₀ − v₀∘σ` is
/// one-sided and `h = −v₀`.
pub fn reduce_cocycle(spec: &SubshiftSpec, f: &TwoSidedFunction, anchor: &AnchorChoice) -> Result<Reduction> {
    let scale = f.max_abs();
    if f.past() == 0 {
        return Ok(Reduction { f_tilde: f.to_cylinder(spec)?, h: Window::constant(C64::new(0.0, 0.0)) });
    }
    let v0 = build_vm_function(spec, f, 0, anchor);
    let ft = sub(spec, &f.add(spec, &v0), &v0.compose_shift(spec, 1));
    let ft = compress_scalar(spec, &ft, scale);
    if ft.past() != 0 {
        return Err(Error::Degenerate(format!("reduced cocycle still depends on {} past coordinates", ft.past())));
    }
    let h = compress_scalar(spec, &v0.scale(C64::new(-1.0, 0.0)), scale);
    Ok(Reduction { f_tilde: ft.to_cylinder(spec)?, h })
}

/// `max |f − f̃ − h + h∘σ|` over a common window.
pub fn cohomology_residual(spec: &SubshiftSpec, f: &TwoSidedFunction, red: &Reduction) -> f64 {
    let rhs = sub(spec, &Window::from_cylinder(&red.f_tilde).add(spec, &red.h), &red.h.compose_shift(spec, 1));
    sub(spec, f, &rhs).max_abs()
}

/// `s̃(x, t) = s(x, t − h(x))`.
pub fn conjugate_observable(spec: &SubshiftSpec, s: &Observable, h: &TwoSidedFunction) -> Result<Observable> {
    if !h.is_real(0.0) {
        return Err(Error::invalid("transfer function must be real"));
    }
    s.conjugate(spec, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_past_coordinate() {
        let spec = SubshiftSpec::full_shift(2, 0.5).unwrap();
        let anchor = AnchorChoice::lexicographic(&spec).unwrap();
        let g = |a: Symbol| if a == 0 { 1.0 } else { -1.0 };
        let f = Window::from_fn(&spec, 1, 0, |w| C64::new(g(w[0]), 0.0));
        let red = reduce_cocycle(&spec, &f, &anchor).unwrap();
        // anchor past of every symbol is all zeros, so f̃(x) = g(x₀) + g(0) − g(0)
        assert_eq!(red.f_tilde.depth(), 1);
        assert_eq!(red.f_tilde.real_values(), vec![1.0, -1.0]);
        assert!(cohomology_residual(&spec, &f, &red) < 1e-15);
    }
}
