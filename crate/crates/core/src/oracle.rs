//! Ground-truth correlations `⟨r∘Fⁿ, s⟩ = ∫ r(σⁿx, t + S_n f(x))·conj(s(x, t)) dν`.
//!
//! The exact oracle enumerates every admissible word long enough to
//! determine `r∘σⁿ`, `s` and `S_n f`, weights it by its Gibbs measure and
//! evaluates the fiber integral in closed form. The Monte Carlo estimator
//! samples words from the Markov structure of the Gibbs measure and the
//! fiber coordinate from a Gaussian proposal.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::GibbsData;
use crate::observables::Observable;
use crate::sft::{Symbol, C64};
use crate::window::TwoSidedFunction;

/// Limits and seeds for the oracle estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    #[serde(default = "default_max_words")]
    pub max_words: u64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_max_words() -> u64 {
    20_000_000
}

fn default_mc_samples() -> usize {
    1_000_000
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_words: default_max_words(), rng_seed: 0, mc_samples: default_mc_samples() }
    }
}

/// Neumaier-compensated complex sum.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 += (acc.0 - t) + x;
    } else {
        acc.1 += (x - t) + acc.0;
    }
    acc.0 = t;
}

impl Compensated {
    fn add(&mut self, z: C64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    fn value(&self) -> C64 {
        C64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// Coordinate layout shared by both estimators: words cover `−past..len−past`.
struct Layout {
    past: usize,
    len: usize,
}

fn layout(g: &GibbsData, f: &TwoSidedFunction, r: &Observable, s: &Observable, n: usize) -> Layout {
    let past = r.past().max(s.past()).max(f.past());
    let mut future = (n + r.future()).max(s.future()).max(1);
    if n > 0 {
        future = future.max(n - 1 + f.future());
    }
    let len = (past + future).max(g.depth());
    Layout { past, len }
}

struct Enumerator<'a> {
    g: &'a GibbsData,
    f: &'a TwoSidedFunction,
    r: &'a Observable,
    s: &'a Observable,
    n: usize,
    past: usize,
    len: usize,
    reverse: bool,
}

impl Enumerator<'_> {
    /// The `f`-term with index `i` reads positions `past+i−Pf .. past+i+Qf`
    /// of the buffer, so it becomes available once the buffer has length
    /// `past + Qf + i`.
    fn completed_term(&self, buf: &[Symbol]) -> f64 {
        match buf.len().checked_sub(self.past + self.f.future()) {
            Some(i) if i < self.n => self.f.at(self.g.spec(), buf, self.past + i).re,
            _ => 0.0,
        }
    }

    /// Depth-first walk. `buf` holds the current prefix, `prob` its measure
    /// once the prefix reaches the working depth, and `birkhoff` the sum of
    /// the `f`-terms already determined by the prefix.
    fn walk(&self, buf: &mut Vec<Symbol>, prob: f64, birkhoff: f64, acc: &mut Compensated) {
        let spec = self.g.spec();
        let l = buf.len();
        if l == self.len {
            let rf = self.r.fiber_at(spec, buf, self.past + self.n);
            let sf = self.s.fiber_at(spec, buf, self.past);
            acc.add(rf.cross_correlation(sf, birkhoff) * prob);
            return;
        }
        let symbols: Vec<Symbol> = match buf.last() {
            Some(&p) => spec.successors(p).collect(),
            None => (0..spec.alphabet_size() as Symbol).collect(),
        };
        let order: Box<dyn Iterator<Item = &Symbol>> =
            if self.reverse { Box::new(symbols.iter().rev()) } else { Box::new(symbols.iter()) };
        let r = self.g.depth();
        for &b in order {
            let next_prob = if l + 1 < r {
                prob
            } else if l + 1 == r {
                buf.push(b);
                let p = self.g.cylinder_measure(buf);
                buf.pop();
                p
            } else {
                prob * self.g.forward_probability(&buf[l - r..], b)
            };
            if next_prob == 0.0 && l + 1 >= r {
                continue;
            }
            buf.push(b);
            let next_sum = birkhoff + self.completed_term(buf);
            self.walk(buf, next_prob, next_sum, acc);
            buf.pop();
        }
    }
}

fn check_inputs(g: &GibbsData, f: &TwoSidedFunction) -> Result<()> {
    if !f.is_real(0.0) {
        return Err(Error::invalid("f must be real-valued"));
    }
    if f.values().len() as u128 != g.spec().word_count(f.width()) {
        return Err(Error::invalid("f table does not match the subshift"));
    }
    Ok(())
}

/// Exact `⟨r∘Fⁿ, s⟩` by enumeration of admissible words.
pub fn oracle_correlation(
    g: &GibbsData,
    f: &TwoSidedFunction,
    r: &Observable,
    s: &Observable,
    n: usize,
    budget: &OracleBudget,
) -> Result<C64> {
    oracle_correlation_ordered(g, f, r, s, n, budget, false)
}

/// As [`oracle_correlation`], visiting symbols in reverse order when `reverse` is set.
pub fn oracle_correlation_ordered(
    g: &GibbsData,
    f: &TwoSidedFunction,
    r: &Observable,
    s: &Observable,
    n: usize,
    budget: &OracleBudget,
    reverse: bool,
) -> Result<C64> {
    check_inputs(g, f)?;
    let spec = g.spec();
    let Layout { past, len } = layout(g, f, r, s, n);
    let needed = spec.word_count(len);
    if needed > budget.max_words as u128 {
        return Err(Error::Budget { needed, cap: budget.max_words });
    }
    let e = Enumerator { g, f, r, s, n, past, len, reverse };
    let mut firsts: Vec<Symbol> = (0..spec.alphabet_size() as Symbol).collect();
    if reverse {
        firsts.reverse();
    }
    let parts: Vec<Compensated> = firsts
        .par_iter()
        .map(|&a| {
            let mut acc = Compensated::default();
            let mut buf = Vec::with_capacity(len);
            buf.push(a);
            let prob = if g.depth() == 1 { g.cylinder_measure(&buf) } else { 1.0 };
            let birk = e.completed_term(&[]) + e.completed_term(&buf);
            e.walk(&mut buf, prob, birk, &mut acc);
            acc
        })
        .collect();
    let mut total = Compensated::default();
    for p in &parts {
        total.add(C64::new(p.re.0, p.im.0));
        total.add(C64::new(p.re.1, p.im.1));
    }
    Ok(total.value())
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: C64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Number of independent random streams; fixed so that results do not
/// depend on the number of threads.
const MC_STREAMS: u64 = 64;

/// Importance-sampled estimate of `⟨r∘Fⁿ, s⟩`.
pub fn mc_correlation(
    g: &GibbsData,
    f: &TwoSidedFunction,
    r: &Observable,
    s: &Observable,
    n: usize,
    budget: &OracleBudget,
) -> Result<McEstimate> {
    check_inputs(g, f)?;
    if budget.mc_samples < 1000 {
        return Err(Error::invalid("Monte Carlo needs at least 1000 samples"));
    }
    let seed = budget.rng_seed;
    if r.is_zero() || s.is_zero() {
        return Ok(McEstimate { estimate: C64::new(0.0, 0.0), stderr: 0.0, samples: budget.mc_samples, seed });
    }
    let spec = g.spec();
    let Layout { past, len } = layout(g, f, r, s, n);
    let depth = g.depth();

    // Proposal for t: a Gaussian wider than every fiber of s, centred on them.
    let atoms = s.table().values().iter().flat_map(|fs| fs.atoms.iter());
    let (mut lo, mut hi, mut width) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for a in atoms {
        lo = lo.min(a.center);
        hi = hi.max(a.center);
        width = width.max(a.width);
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Degenerate("proposal cannot dominate the fiber of s".into()));
    }
    let mean = 0.5 * (lo + hi);
    let sigma = 2.0 * width + 0.5 * (hi - lo);
    let normal = Normal::new(mean, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let log_norm = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();

    let start_words = spec.admissible_words(depth);
    let start = WeightedIndex::new(g.measures()).map_err(|e| Error::Degenerate(e.to_string()))?;
    // successor distributions per length-`depth` tail
    let successors: Vec<(Vec<Symbol>, WeightedIndex<f64>)> = start_words
        .iter()
        .map(|w| {
            let syms: Vec<Symbol> = spec.successors(*w.symbols().last().expect("depth >= 1")).collect();
            let probs: Vec<f64> = syms.iter().map(|&b| g.forward_probability(w.symbols(), b)).collect();
            WeightedIndex::new(&probs).map(|d| (syms, d)).map_err(|e| Error::Degenerate(e.to_string()))
        })
        .collect::<Result<_>>()?;
    let sn = f.birkhoff(spec, n);

    let total = budget.mc_samples as u64;
    let per = total / MC_STREAMS;
    let extra = total % MC_STREAMS;
    let parts: Vec<(C64, f64)> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let count = per + u64::from(stream < extra);
            let mut sum = C64::new(0.0, 0.0);
            let mut sum_sq = 0.0;
            let mut buf: Vec<Symbol> = Vec::with_capacity(len);
            for _ in 0..count {
                buf.clear();
                buf.extend_from_slice(start_words[start.sample(&mut rng)].symbols());
                while buf.len() < len {
                    let tail = spec.rank_unchecked(&buf[buf.len() - depth..]);
                    let (syms, dist) = &successors[tail];
                    buf.push(syms[dist.sample(&mut rng)]);
                }
                let t: f64 = normal.sample(&mut rng);
                let shift = sn.at(spec, &buf, past).re;
                let rv = r.fiber_at(spec, &buf, past + n).eval(t + shift);
                let sv = s.fiber_at(spec, &buf, past).eval(t);
                let z = (t - mean) / sigma;
                let q = (log_norm - 0.5 * z * z).exp();
                let x = rv * sv.conj() / q;
                sum += x;
                sum_sq += x.norm_sqr();
            }
            (sum, sum_sq)
        })
        .collect();
    let mut sum = C64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    for (a, b) in parts {
        sum += a;
        sum_sq += b;
    }
    let nf = total as f64;
    let estimate = sum / nf;
    let var = ((sum_sq - nf * estimate.norm_sqr()) / (nf - 1.0)).max(0.0);
    Ok(McEstimate { estimate, stderr: (var / nf).sqrt(), samples: budget.mc_samples, seed })
}
