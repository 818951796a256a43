//! The untwisted Ruelle operator and the Gibbs measure of a normalized potential.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{power_eigen, CMatrix};
use crate::sft::{CylinderFunction, SubshiftSpec, Symbol, Word, C64};

/// Matrix of `L₀` acting on functions of `r` coordinates.
///
/// Row `x` and column `y` are words of length `r`. The entry is the sum of
/// `exp(u(a·x))` over symbols `a` with `(a·x)[..r] = y`.
pub fn ruelle_matrix(spec: &SubshiftSpec, potential: &CylinderFunction, r: usize) -> Result<DMatrix<f64>> {
    if potential.depth() > r + 1 {
        return Err(Error::invalid(format!(
            "working depth {r} too small for potential of depth {}",
            potential.depth()
        )));
    }
    if !potential.is_real(0.0) {
        return Err(Error::invalid("potential must be real"));
    }
    let words = spec.admissible_words(r);
    let d = words.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    let mut buf: Vec<Symbol> = Vec::with_capacity(r + 1);
    for (i, x) in words.iter().enumerate() {
        for a in spec.preimage_symbols(x) {
            buf.clear();
            buf.push(a);
            buf.extend_from_slice(x.symbols());
            let j = spec.rank_unchecked(&buf[..r]);
            m[(i, j)] += potential.eval_re(spec, &buf).exp();
        }
    }
    Ok(m)
}

/// Normalized Gibbs data at working depth `r`.
#[derive(Clone, Debug)]
pub struct GibbsData {
    spec: SubshiftSpec,
    potential: CylinderFunction,
    normalized_potential: CylinderFunction,
    depth: usize,
    leading_eigenvalue: f64,
    right_eigvec: Vec<f64>,
    left_eigvec: Vec<f64>,
    words: Vec<Word>,
    measures: Vec<f64>,
    measures_next: Vec<f64>,
}

/// Normalize `potential` at working depth `depth` and build the Gibbs measure.
pub fn normalize_potential(spec: &SubshiftSpec, potential: &CylinderFunction, depth: usize) -> Result<GibbsData> {
    GibbsData::new(spec, potential, depth)
}

impl GibbsData {
    pub fn new(spec: &SubshiftSpec, potential: &CylinderFunction, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("working depth must be at least 1"));
        }
        let m = ruelle_matrix(spec, potential, depth)?;
        let mc: CMatrix = m.map(|v| C64::new(v, 0.0));
        let t = power_eigen(&mc, None)?;
        let lambda = t.lambda.re;
        let right: Vec<f64> = t.right.iter().map(|z| z.re).collect();
        let left: Vec<f64> = t.left.iter().map(|z| z.re).collect();
        if lambda <= 0.0 || right.iter().chain(&left).any(|&v| v <= 0.0) {
            return Err(Error::Degenerate("Perron eigendata is not positive".into()));
        }

        let words = spec.admissible_words(depth);
        let log_lambda = lambda.ln();
        let normalized_potential = CylinderFunction::from_fn(spec, depth + 1, |y| {
            let s = y.symbols();
            let hy = right[spec.rank_unchecked(&s[..depth])];
            let hs = right[spec.rank_unchecked(&s[1..])];
            C64::new(potential.eval_re(spec, s) + hy.ln() - hs.ln() - log_lambda, 0.0)
        });

        let mut measures: Vec<f64> = left.iter().zip(&right).map(|(l, h)| l * h).collect();
        let total: f64 = measures.iter().sum();
        measures.iter_mut().for_each(|v| *v /= total);

        let next_words = spec.admissible_words(depth + 1);
        let measures_next = next_words
            .iter()
            .enumerate()
            .map(|(i, w)| normalized_potential.values()[i].re.exp() * measures[spec.rank_unchecked(&w.symbols()[1..])])
            .collect();

        Ok(GibbsData {
            spec: spec.clone(),
            potential: potential.clone(),
            normalized_potential,
            depth,
            leading_eigenvalue: lambda,
            right_eigvec: right,
            left_eigvec: left,
            words,
            measures,
            measures_next,
        })
    }

    pub fn spec(&self) -> &SubshiftSpec {
        &self.spec
    }

    pub fn potential(&self) -> &CylinderFunction {
        &self.potential
    }

    pub fn normalized_potential(&self) -> &CylinderFunction {
        &self.normalized_potential
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leading_eigenvalue(&self) -> f64 {
        self.leading_eigenvalue
    }

    pub fn right_eigvec(&self) -> &[f64] {
        &self.right_eigvec
    }

    pub fn left_eigvec(&self) -> &[f64] {
        &self.left_eigvec
    }

    /// Words of length `depth()` in index order.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// Measures of the cylinders of length `depth()`, in index order.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Matrix of the normalized operator at the working depth.
    pub fn operator_matrix(&self) -> DMatrix<f64> {
        ruelle_matrix(&self.spec, &self.normalized_potential, self.depth).expect("depth is consistent")
    }

    /// Measure of the cylinder of an arbitrary admissible word.
    pub fn cylinder_measure(&self, w: &[Symbol]) -> f64 {
        let r = self.depth;
        let spec = &self.spec;
        if !spec.is_admissible(w) {
            return 0.0;
        }
        match w.len().cmp(&r) {
            std::cmp::Ordering::Equal => self.measures[spec.rank_unchecked(w)],
            std::cmp::Ordering::Greater => {
                let k = w.len() - r;
                let mut log_weight = 0.0;
                for i in 0..k {
                    log_weight += self.normalized_potential.eval_re(spec, &w[i..i + r + 1]);
                }
                log_weight.exp() * self.measures[spec.rank_unchecked(&w[k..])]
            }
            std::cmp::Ordering::Less => {
                let mut total = 0.0;
                let mut buf = w.to_vec();
                self.sum_extensions(&mut buf, &mut total);
                total
            }
        }
    }

    fn sum_extensions(&self, buf: &mut Vec<Symbol>, total: &mut f64) {
        if buf.len() == self.depth {
            *total += self.measures[self.spec.rank_unchecked(buf)];
            return;
        }
        let succ: Vec<Symbol> = match buf.last() {
            Some(&p) => self.spec.successors(p).collect(),
            None => (0..self.spec.alphabet_size() as Symbol).collect(),
        };
        for b in succ {
            buf.push(b);
            self.sum_extensions(buf, total);
            buf.pop();
        }
    }

    /// Conditional probability that `b` follows a word whose last `depth()`
    /// symbols are `tail`. The Gibbs measure of a depth-`r+1` potential is an
    /// `r`-step Markov measure, so this drives forward word sampling.
    pub fn forward_probability(&self, tail: &[Symbol], b: Symbol) -> f64 {
        debug_assert_eq!(tail.len(), self.depth);
        if !self.spec.allowed(tail[tail.len() - 1], b) {
            return 0.0;
        }
        let mut ext = tail.to_vec();
        ext.push(b);
        self.measures_next[self.spec.rank_unchecked(&ext)] / self.measures[self.spec.rank_unchecked(tail)]
    }

    /// Apply the normalized transfer operator to `w` (depth at most `r+1`),
    /// returning a function of depth `r`.
    pub fn transfer(&self, w: &CylinderFunction) -> Result<CylinderFunction> {
        let r = self.depth;
        if w.depth() > r + 1 {
            return Err(Error::invalid(format!("transfer needs depth <= {}, got {}", r + 1, w.depth())));
        }
        let spec = &self.spec;
        let mut buf = Vec::with_capacity(r + 1);
        let values = self
            .words
            .iter()
            .map(|x| {
                let mut acc = C64::new(0.0, 0.0);
                for a in spec.preimage_symbols(x) {
                    buf.clear();
                    buf.push(a);
                    buf.extend_from_slice(x.symbols());
                    acc += self.normalized_potential.eval_re(spec, &buf).exp() * w.eval(spec, &buf);
                }
                acc
            })
            .collect();
        CylinderFunction::new(spec, r, values)
    }
}

/// `S_n f` evaluated on the cylinder of `word`.
pub fn birkhoff_sum(spec: &SubshiftSpec, f: &CylinderFunction, word: &Word, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let need = n + f.depth().max(1) - 1;
    if word.len() < need {
        return Err(Error::invalid(format!("word of length {} too short, need {need}", word.len())));
    }
    let s = word.symbols();
    Ok((0..n).map(|i| f.eval_re(spec, &s[i..])).sum())
}

/// `∫ w dμ`.
pub fn integrate(g: &GibbsData, w: &CylinderFunction) -> C64 {
    let spec = g.spec();
    spec.admissible_words(w.depth())
        .iter()
        .zip(w.values())
        .map(|(word, &v)| v * g.cylinder_measure(word.symbols()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_matrix_and_measures() {
        let spec = SubshiftSpec::full_shift(2, 0.5).unwrap();
        let u = CylinderFunction::from_real(&spec, 0, &[-(2f64.ln())]).unwrap();
        let m = ruelle_matrix(&spec, &u, 1).unwrap();
        assert!(m.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let g = GibbsData::new(&spec, &u, 1).unwrap();
        assert!((g.leading_eigenvalue() - 1.0).abs() < 1e-14);
        assert!((g.cylinder_measure(&[0]) - 0.5).abs() < 1e-14);
        let total: f64 = spec.admissible_words(2).iter().map(|w| g.cylinder_measure(w.symbols())).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_mean_parry() {
        let spec = SubshiftSpec::golden_mean(0.5).unwrap();
        let u = CylinderFunction::from_real(&spec, 0, &[0.0]).unwrap();
        let m = ruelle_matrix(&spec, &u, 1).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]));
        let g = GibbsData::new(&spec, &u, 1).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((g.leading_eigenvalue() - phi).abs() < 1e-13);
        // Parry measure of [0]: phi^2 / (1 + phi^2)
        let expected = phi * phi / (1.0 + phi * phi);
        assert!((g.cylinder_measure(&[0]) - expected).abs() < 1e-13);
        let row_sums = g.operator_matrix().column_sum();
        assert!(row_sums.iter().all(|&s| (s - 1.0).abs() < 1e-13));
    }

    #[test]
    fn birkhoff_examples() {
        let spec = SubshiftSpec::full_shift(2, 0.5).unwrap();
        let f = CylinderFunction::from_real(&spec, 1, &[1.0, -1.0]).unwrap();
        let w = Word::from_digits("010");
        assert_eq!(birkhoff_sum(&spec, &f, &w, 0).unwrap(), 0.0);
        assert_eq!(birkhoff_sum(&spec, &f, &w, 2).unwrap(), 0.0);
        assert_eq!(birkhoff_sum(&spec, &f, &w, 3).unwrap(), 1.0);
        assert!(birkhoff_sum(&spec, &f, &w, 4).is_err());
    }
}
