//! Functions of a finite two-sided coordinate window.
//!
//! A `Window<T>` with past `P` and future `Q` depends on the coordinates
//! `x_{−P}, …, x_{Q−1}`. Values are stored against the admissible words of
//! length `P + Q` in lexicographic order, so a one-sided cylinder function is
//! the special case `P = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::{CylinderFunction, SubshiftSpec, Symbol, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    past: usize,
    future: usize,
    values: Vec<T>,
}

/// A complex function of a two-sided window.
pub type TwoSidedFunction = Window<C64>;

impl<T> Window<T> {
    pub fn new(spec: &SubshiftSpec, past: usize, future: usize, values: Vec<T>) -> Result<Self> {
        let expected = spec.word_count(past + future);
        if values.len() as u128 != expected {
            return Err(Error::invalid(format!(
                "window [-{past}, {future}) needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Window { past, future, values })
    }

    /// A function of no coordinates.
    pub fn constant(value: T) -> Self {
        Window { past: 0, future: 0, values: vec![value] }
    }

    /// Tabulate `func` on every admissible window word. The closure receives
    /// the word covering coordinates `−past..future`.
    pub fn from_fn(spec: &SubshiftSpec, past: usize, future: usize, mut func: impl FnMut(&[Symbol]) -> T) -> Self {
        let values = spec.admissible_words(past + future).iter().map(|w| func(w.symbols())).collect();
        Window { past, future, values }
    }

    pub fn try_from_fn(
        spec: &SubshiftSpec,
        past: usize,
        future: usize,
        mut func: impl FnMut(&[Symbol]) -> Result<T>,
    ) -> Result<Self> {
        let values =
            spec.admissible_words(past + future).iter().map(|w| func(w.symbols())).collect::<Result<Vec<T>>>()?;
        Ok(Window { past, future, values })
    }

    pub fn past(&self) -> usize {
        self.past
    }

    pub fn future(&self) -> usize {
        self.future
    }

    pub fn width(&self) -> usize {
        self.past + self.future
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at a word covering coordinates `−word_past..word.len()−word_past`.
    #[inline]
    pub fn at(&self, spec: &SubshiftSpec, word: &[Symbol], word_past: usize) -> &T {
        debug_assert!(word_past >= self.past && word.len() >= word_past + self.future);
        let start = word_past - self.past;
        &self.values[spec.rank_unchecked(&word[start..start + self.past + self.future])]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Window<U> {
        Window { past: self.past, future: self.future, values: self.values.iter().map(f).collect() }
    }
}

impl<T: Clone> Window<T> {
    /// The same function on a wider window.
    pub fn promote(&self, spec: &SubshiftSpec, past: usize, future: usize) -> Result<Self> {
        if past < self.past || future < self.future {
            return Err(Error::invalid(format!(
                "cannot shrink window [-{}, {}) to [-{past}, {future})",
                self.past, self.future
            )));
        }
        if past == self.past && future == self.future {
            return Ok(self.clone());
        }
        Ok(Window::from_fn(spec, past, future, |w| self.at(spec, w, past).clone()))
    }

    /// `w ∘ σ^k`, which reads coordinates `k−P..k+Q−1`.
    pub fn compose_shift(&self, spec: &SubshiftSpec, k: usize) -> Self {
        let past = self.past.saturating_sub(k);
        let future = self.future + k;
        Window::from_fn(spec, past, future, |w| self.at(spec, w, past + k).clone())
    }
}

impl Window<C64> {
    pub fn from_cylinder(f: &CylinderFunction) -> Self {
        Window { past: 0, future: f.depth(), values: f.values().to_vec() }
    }

    /// The one-sided cylinder function, when the window has no past.
    pub fn to_cylinder(&self, spec: &SubshiftSpec) -> Result<CylinderFunction> {
        if self.past != 0 {
            return Err(Error::invalid(format!("function still depends on {} past coordinates", self.past)));
        }
        CylinderFunction::new(spec, self.future, self.values.clone())
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Pointwise sum after aligning both windows.
    pub fn add(&self, spec: &SubshiftSpec, other: &Self) -> Self {
        let past = self.past.max(other.past);
        let future = self.future.max(other.future);
        Window::from_fn(spec, past, future, |w| self.at(spec, w, past) + other.at(spec, w, past))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    /// Birkhoff sum `S_n f` as a window function.
    pub fn birkhoff(&self, spec: &SubshiftSpec, n: usize) -> Self {
        let past = self.past;
        let future = if n == 0 { 0 } else { self.future + n - 1 };
        Window::from_fn(spec, past, future, |w| (0..n).map(|i| *self.at(spec, w, past + i)).sum())
    }
}

/// Smallest window `[-p, q)` on which `value` is determined, where `same`
/// decides whether two tabulated values agree.
pub fn minimal_window<T: Clone>(spec: &SubshiftSpec, w: &Window<T>, same: impl Fn(&T, &T) -> bool) -> Window<T> {
    let mut cur = w.clone();
    loop {
        if let Some(next) =
            drop_coordinate(spec, &cur, true, &same).or_else(|| drop_coordinate(spec, &cur, false, &same))
        {
            cur = next;
        } else {
            return cur;
        }
    }
}

/// Try to remove the outermost past (or future) coordinate.
fn drop_coordinate<T: Clone>(
    spec: &SubshiftSpec,
    w: &Window<T>,
    from_past: bool,
    same: &impl Fn(&T, &T) -> bool,
) -> Option<Window<T>> {
    let (past, future) =
        if from_past { (w.past.checked_sub(1)?, w.future) } else { (w.past, w.future.checked_sub(1)?) };
    let mut values: Vec<Option<T>> = vec![None; spec.word_count(past + future) as usize];
    for (word, v) in spec.admissible_words(w.width()).iter().zip(&w.values) {
        let s = word.symbols();
        let reduced = if from_past { &s[1..] } else { &s[..s.len() - 1] };
        let slot = &mut values[spec.rank_unchecked(reduced)];
        match slot {
            Some(existing) if !same(existing, v) => return None,
            Some(_) => {}
            None => *slot = Some(v.clone()),
        }
    }
    let values = values.into_iter().collect::<Option<Vec<T>>>()?;
    Some(Window { past, future, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_and_promote() {
        let spec = SubshiftSpec::full_shift(2, 0.5).unwrap();
        // f(x) = x_{-1}
        let f = Window::from_fn(&spec, 1, 0, |w| C64::new(w[0] as f64, 0.0));
        let g = f.compose_shift(&spec, 1);
        assert_eq!((g.past(), g.future()), (0, 1));
        assert_eq!(g.values(), &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let p = f.promote(&spec, 2, 1).unwrap();
        let m = minimal_window(&spec, &p, |a, b| a == b);
        assert_eq!(m, f);
    }
}
