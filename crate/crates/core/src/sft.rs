//! Subshifts of finite type with their admissible words.
//!
//! Words of a fixed length are always ordered lexicographically by symbol
//! value. Every vector that represents a function of finitely many
//! coordinates uses that order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub type Symbol = u8;
pub type C64 = Complex64;

/// Word lengths up to this bound can be ranked without enumeration.
const RANK_TABLE_LEN: usize = 96;

/// A finite sequence of symbols.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Parse a word written as decimal digits, e.g. `"0110"`.
    pub fn from_digits(s: &str) -> Self {
        Word(
            s.bytes()
                .map(|b| {
                    assert!(b.is_ascii_digit(), "non-digit symbol in {s:?}");
                    b - b'0'
                })
                .collect(),
        )
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n].to_vec())
    }

    /// The word with its first `k` symbols removed (the shift applied `k` times).
    pub fn shifted(&self, k: usize) -> Word {
        Word(self.0[k..].to_vec())
    }

    pub fn prepend(&self, a: Symbol) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(a);
        v.extend_from_slice(&self.0);
        Word(v)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SubshiftRaw {
    alphabet_size: usize,
    transition: Vec<Vec<u8>>,
    theta: f64,
}

/// Alphabet, 0/1 transition matrix and metric parameter of a mixing SFT.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SubshiftRaw", into = "SubshiftRaw")]
pub struct SubshiftSpec {
    alphabet_size: usize,
    transition: Vec<Vec<u8>>,
    theta: f64,
    /// `counts[l][a]`: admissible words of length `l + 1` starting with `a`.
    counts: Vec<Vec<u128>>,
}

impl PartialEq for SubshiftSpec {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet_size == other.alphabet_size && self.transition == other.transition && self.theta == other.theta
    }
}

impl TryFrom<SubshiftRaw> for SubshiftSpec {
    type Error = Error;
    fn try_from(raw: SubshiftRaw) -> Result<Self> {
        SubshiftSpec::new(raw.alphabet_size, raw.transition, raw.theta)
    }
}

impl From<SubshiftSpec> for SubshiftRaw {
    fn from(s: SubshiftSpec) -> Self {
        SubshiftRaw { alphabet_size: s.alphabet_size, transition: s.transition, theta: s.theta }
    }
}

impl SubshiftSpec {
    pub fn new(alphabet_size: usize, transition: Vec<Vec<u8>>, theta: f64) -> Result<Self> {
        if alphabet_size == 0 || alphabet_size > 255 {
            return Err(Error::invalid("alphabet_size must lie in 1..=255"));
        }
        if transition.len() != alphabet_size || transition.iter().any(|row| row.len() != alphabet_size) {
            return Err(Error::invalid("transition matrix must be alphabet_size x alphabet_size"));
        }
        if transition.iter().flatten().any(|&v| v > 1) {
            return Err(Error::invalid("transition entries must be 0 or 1"));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid("theta must lie in (0,1)"));
        }
        if !is_primitive(&transition) {
            return Err(Error::NotPrimitive);
        }
        let mut counts = vec![vec![1u128; alphabet_size]];
        for l in 1..RANK_TABLE_LEN {
            let prev = &counts[l - 1];
            let row: Vec<u128> = (0..alphabet_size)
                .map(|a| {
                    (0..alphabet_size)
                        .filter(|&b| transition[a][b] == 1)
                        .fold(0u128, |acc, b| acc.saturating_add(prev[b]))
                })
                .collect();
            counts.push(row);
        }
        Ok(SubshiftSpec { alphabet_size, transition, theta, counts })
    }

    /// The full shift on `k` symbols.
    pub fn full_shift(k: usize, theta: f64) -> Result<Self> {
        SubshiftSpec::new(k, vec![vec![1; k]; k], theta)
    }

    /// The golden-mean shift: the word `11` is forbidden.
    pub fn golden_mean(theta: f64) -> Result<Self> {
        SubshiftSpec::new(2, vec![vec![1, 1], vec![1, 0]], theta)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn transition(&self) -> &[Vec<u8>] {
        &self.transition
    }

    #[inline]
    pub fn allowed(&self, a: Symbol, b: Symbol) -> bool {
        self.transition[a as usize][b as usize] == 1
    }

    pub fn is_admissible(&self, w: &[Symbol]) -> bool {
        w.iter().all(|&s| (s as usize) < self.alphabet_size) && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    /// Number of admissible words of length `r`, saturating at `u128::MAX`.
    pub fn word_count(&self, r: usize) -> u128 {
        if r == 0 {
            return 1;
        }
        if r <= RANK_TABLE_LEN {
            return self.counts[r - 1].iter().fold(0u128, |a, &c| a.saturating_add(c));
        }
        u128::MAX
    }

    /// Position of an admissible word in the lexicographic list of words of its length.
    pub fn rank(&self, w: &[Symbol]) -> Option<usize> {
        let len = w.len();
        if len > RANK_TABLE_LEN || !self.is_admissible(w) {
            return None;
        }
        Some(self.rank_unchecked(w))
    }

    /// As [`rank`](Self::rank) without the admissibility check.
    #[inline]
    pub fn rank_unchecked(&self, w: &[Symbol]) -> usize {
        let len = w.len();
        let mut rank: u128 = 0;
        for i in 0..len {
            let rest = len - i - 1;
            for b in 0..w[i] {
                if i == 0 || self.allowed(w[i - 1], b) {
                    rank += self.counts[rest][b as usize];
                }
            }
        }
        rank as usize
    }

    /// Admissible words of length `r` in lexicographic order.
    pub fn admissible_words(&self, r: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut buf = Vec::with_capacity(r);
        self.extend_words(&mut buf, r, &mut out);
        out
    }

    fn extend_words(&self, buf: &mut Vec<Symbol>, r: usize, out: &mut Vec<Word>) {
        if buf.len() == r {
            out.push(Word(buf.clone()));
            return;
        }
        for a in 0..self.alphabet_size as Symbol {
            if buf.last().is_none_or(|&p| self.allowed(p, a)) {
                buf.push(a);
                self.extend_words(buf, r, out);
                buf.pop();
            }
        }
    }

    /// Symbols `a` such that `a·word` is admissible.
    pub fn preimage_symbols(&self, word: &Word) -> Vec<Symbol> {
        (0..self.alphabet_size as Symbol).filter(|&a| word.0.first().is_none_or(|&w0| self.allowed(a, w0))).collect()
    }

    /// Symbols that may follow `a`.
    pub fn successors(&self, a: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.alphabet_size as Symbol).filter(move |&b| self.allowed(a, b))
    }
}

fn is_primitive(t: &[Vec<u8>]) -> bool {
    let k = t.len();
    let mut p: Vec<Vec<bool>> = t.iter().map(|r| r.iter().map(|&v| v == 1).collect()).collect();
    for _ in 0..k * k {
        if p.iter().flatten().all(|&v| v) {
            return true;
        }
        let mut next = vec![vec![false; k]; k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = (0..k).any(|l| p[i][l] && t[l][j] == 1);
            }
        }
        p = next;
    }
    p.iter().flatten().all(|&v| v)
}

/// `θ` raised to the length of the common prefix of `x` and `y`.
pub fn d_theta(spec: &SubshiftSpec, x: &Word, y: &Word) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("d_theta needs equal lengths, got {} and {}", x.len(), y.len())));
    }
    let common = x.0.iter().zip(&y.0).take_while(|(a, b)| a == b).count();
    Ok(spec.theta.powi(common as i32))
}

/// A complex function of the first `depth` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunction {
    depth: usize,
    values: Vec<C64>,
}

impl CylinderFunction {
    pub fn new(spec: &SubshiftSpec, depth: usize, values: Vec<C64>) -> Result<Self> {
        let expected = spec.word_count(depth);
        if values.len() as u128 != expected {
            return Err(Error::invalid(format!(
                "cylinder function of depth {depth} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(CylinderFunction { depth, values })
    }

    pub fn from_real(spec: &SubshiftSpec, depth: usize, values: &[f64]) -> Result<Self> {
        Self::new(spec, depth, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn constant(spec: &SubshiftSpec, depth: usize, c: C64) -> Self {
        let n = spec.word_count(depth) as usize;
        CylinderFunction { depth, values: vec![c; n] }
    }

    /// Tabulate `func` on the words of length `depth`.
    pub fn from_fn(spec: &SubshiftSpec, depth: usize, mut func: impl FnMut(&Word) -> C64) -> Self {
        let values = spec.admissible_words(depth).iter().map(&mut func).collect();
        CylinderFunction { depth, values }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|z| z.im.abs() <= tol)
    }

    /// Value on any admissible word of length at least `depth`.
    #[inline]
    pub fn eval(&self, spec: &SubshiftSpec, w: &[Symbol]) -> C64 {
        debug_assert!(w.len() >= self.depth);
        self.values[spec.rank_unchecked(&w[..self.depth])]
    }

    #[inline]
    pub fn eval_re(&self, spec: &SubshiftSpec, w: &[Symbol]) -> f64 {
        self.eval(spec, w).re
    }

    /// The same function viewed at a greater depth.
    pub fn promote(&self, spec: &SubshiftSpec, new_depth: usize) -> Result<Self> {
        if new_depth < self.depth {
            return Err(Error::invalid(format!("cannot promote depth {} to smaller depth {new_depth}", self.depth)));
        }
        if new_depth == self.depth {
            return Ok(self.clone());
        }
        Ok(Self::from_fn(spec, new_depth, |w| self.eval(spec, &w.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CylinderFunction { depth: self.depth, values: self.values.iter().map(|&z| f(z)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_and_ranks_agree() {
        for spec in [SubshiftSpec::full_shift(3, 0.5).unwrap(), SubshiftSpec::golden_mean(0.5).unwrap()] {
            for r in 0..7 {
                let words = spec.admissible_words(r);
                assert_eq!(words.len() as u128, spec.word_count(r));
                for (i, w) in words.iter().enumerate() {
                    assert_eq!(spec.rank(&w.0), Some(i));
                }
                assert!(words.windows(2).all(|p| p[0] < p[1]));
            }
        }
    }

    #[test]
    fn golden_mean_words() {
        let spec = SubshiftSpec::golden_mean(0.5).unwrap();
        let w: Vec<String> = spec.admissible_words(2).iter().map(|w| w.to_string()).collect();
        assert_eq!(w, ["00", "01", "10"]);
        assert_eq!(spec.admissible_words(0), vec![Word::empty()]);
        assert_eq!(spec.preimage_symbols(&Word::from_digits("10")), vec![0]);
        assert_eq!(spec.preimage_symbols(&Word::from_digits("01")), vec![0, 1]);
        assert_eq!(spec.rank(&[1, 1]), None);
    }

    #[test]
    fn rejects_reducible_and_bad_theta() {
        assert!(matches!(SubshiftSpec::new(2, vec![vec![1, 0], vec![0, 1]], 0.5), Err(Error::NotPrimitive)));
        assert!(matches!(SubshiftSpec::new(2, vec![vec![0, 1], vec![1, 0]], 0.5), Err(Error::NotPrimitive)));
        assert!(SubshiftSpec::full_shift(2, 1.0).is_err());
    }

    #[test]
    fn metric_examples() {
        let spec = SubshiftSpec::full_shift(2, 0.5).unwrap();
        let d = |a: &str, b: &str| d_theta(&spec, &Word::from_digits(a), &Word::from_digits(b)).unwrap();
        assert_eq!(d("01", "00"), 0.5);
        assert_eq!(d("0110", "0111"), 0.125);
        assert_eq!(d("10", "00"), 1.0);
        assert_eq!(d("011", "011"), 0.125);
        assert!(d_theta(&spec, &Word::from_digits("0"), &Word::from_digits("01")).is_err());
    }
}
