//! Gauss–Legendre rules and a deterministic adaptive composite integrator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sft::C64;

/// An `m`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            // Tricomi initial guess followed by Newton on P_m.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Apply the rule on `[a, b]`; returns the value and the integral of `|f|`.
    pub fn apply<F: Fn(f64) -> C64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> (C64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = C64::new(0.0, 0.0);
        let mut abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            sum += v * *w;
            abs += v.norm() * w;
        }
        (sum * half, abs * half.abs())
    }
}

/// `P_m(x)` and `P_m'(x)` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Controls for [`integrate_adaptive`].
#[derive(Clone, Debug)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub max_levels: usize,
    pub parallel: bool,
    /// Relative accuracy of the integrand values themselves. Panel errors
    /// below this fraction of `∫|f|` cannot be resolved and are accepted.
    pub rel_noise: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_panels: 200_000,
            max_levels: 60,
            parallel: false,
            rel_noise: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveResult {
    pub value: C64,
    pub error_estimate: f64,
    pub panels: usize,
    pub evaluations: usize,
    /// Sorted breakpoints of the accepted panels.
    pub breakpoints: Vec<f64>,
}

struct Panel {
    a: f64,
    b: f64,
    coarse: Option<(C64, f64)>,
}

struct Evaluated {
    a: f64,
    b: f64,
    left: (C64, f64),
    right: (C64, f64),
    err: f64,
    fine: C64,
    abs: f64,
}

/// Integrate `f` over the union of the panels given by consecutive entries
/// of `breakpoints`, bisecting panels until the estimated error is below
/// `max(abs_tol, rel_tol·|I|)`.
///
/// Every panel is estimated by comparing the rule on the whole panel with
/// the rule on its two halves. Panels are refined level by level, and the
/// result is summed in increasing position, so the value does not depend on
/// the number of worker threads.
pub fn integrate_adaptive<F>(
    f: &F,
    breakpoints: &[f64],
    rule: &GaussLegendre,
    opts: &AdaptiveOptions,
) -> Result<AdaptiveResult>
where
    F: Fn(f64) -> C64 + Sync,
{
    if breakpoints.len() < 2 {
        return Err(Error::invalid("need at least two breakpoints"));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("breakpoints must be strictly increasing"));
    }
    let span = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    let mut active: Vec<Panel> = breakpoints.windows(2).map(|w| Panel { a: w[0], b: w[1], coarse: None }).collect();
    let mut accepted: Vec<(f64, f64, C64, f64)> = Vec::new();
    let mut evaluations = 0usize;
    let m = rule.len();

    for _level in 0..opts.max_levels {
        if active.is_empty() {
            break;
        }
        let eval = |p: &Panel| -> Evaluated {
            let coarse = p.coarse.unwrap_or_else(|| rule.apply(f, p.a, p.b));
            let mid = 0.5 * (p.a + p.b);
            let left = rule.apply(f, p.a, mid);
            let right = rule.apply(f, mid, p.b);
            let fine = left.0 + right.0;
            Evaluated { a: p.a, b: p.b, left, right, err: (coarse.0 - fine).norm(), fine, abs: left.1 + right.1 }
        };
        let evaluated: Vec<Evaluated> =
            if opts.parallel { active.par_iter().map(eval).collect() } else { active.iter().map(eval).collect() };
        evaluations += active.iter().map(|p| if p.coarse.is_some() { 2 * m } else { 3 * m }).sum::<usize>();

        let estimate: C64 = accepted.iter().map(|p| p.2).sum::<C64>() + evaluated.iter().map(|e| e.fine).sum::<C64>();
        let tol = opts.abs_tol.max(opts.rel_tol * estimate.norm());

        let mut next = Vec::new();
        for e in evaluated {
            let share = tol * (e.b - e.a) / span;
            let roundoff = (64.0 * f64::EPSILON).max(4.0 * opts.rel_noise) * e.abs;
            if e.err <= share.max(roundoff) {
                accepted.push((e.a, e.b, e.fine, e.err));
            } else {
                let mid = 0.5 * (e.a + e.b);
                if !(mid > e.a && mid < e.b) {
                    return Err(Error::Quadrature(format!("panel [{}, {}] cannot be bisected further", e.a, e.b)));
                }
                next.push(Panel { a: e.a, b: mid, coarse: Some(e.left) });
                next.push(Panel { a: mid, b: e.b, coarse: Some(e.right) });
            }
        }
        if accepted.len() + next.len() > opts.max_panels {
            return Err(Error::Quadrature(format!("panel cap {} exceeded", opts.max_panels)));
        }
        active = next;
    }
    if !active.is_empty() {
        return Err(Error::Quadrature(format!("not converged after {} refinement levels", opts.max_levels)));
    }
    accepted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = accepted.iter().map(|p| p.2).sum();
    let error_estimate = accepted.iter().map(|p| p.3).sum();
    let mut bps: Vec<f64> = accepted.iter().map(|p| p.0).collect();
    bps.push(accepted.last().map_or(0.0, |p| p.1));
    Ok(AdaptiveResult { value, error_estimate, panels: accepted.len(), evaluations, breakpoints: bps })
}

/// Integrate a real function on `[a, b]` with the default options.
pub fn integrate_real<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let g = |x: f64| C64::new(f(x), 0.0);
    let opts = AdaptiveOptions { abs_tol, ..Default::default() };
    Ok(integrate_adaptive(&g, &[a, b], &GaussLegendre::new(15), &opts)?.value.re)
}
