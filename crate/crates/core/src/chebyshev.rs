//! Chebyshev interpolation on a symmetric interval and conversion to Taylor jets.

use crate::error::{Error, Result};
use crate::sft::C64;

/// Number of interpolation nodes used for eigenvalue-curve jets.
pub const DEFAULT_NODES: usize = 33;

/// Interpolant `Σ c_k T_k(x/a)` on `[-a, a]`.
#[derive(Clone, Debug)]
pub struct Chebyshev {
    halfwidth: f64,
    coeffs: Vec<C64>,
}

/// Chebyshev–Lobatto nodes `a·cos(πk/(N−1))`, `k = 0..N`, in decreasing order.
/// For odd `N` the middle node is exactly zero.
pub fn lobatto_nodes(halfwidth: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let m = (count - 1) as f64;
    (0..count)
        .map(|k| if 2 * k + 1 == count { 0.0 } else { halfwidth * (std::f64::consts::PI * k as f64 / m).cos() })
        .collect()
}

/// Midpoints between consecutive Lobatto nodes, for residual checks.
pub fn check_points(halfwidth: f64, count: usize) -> Vec<f64> {
    let m = (count - 1) as f64;
    (0..count - 1).map(|k| halfwidth * (std::f64::consts::PI * (k as f64 + 0.5) / m).cos()).collect()
}

impl Chebyshev {
    /// Interpolate samples taken at [`lobatto_nodes`].
    pub fn from_lobatto(halfwidth: f64, samples: &[C64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::invalid("need at least two samples"));
        }
        let m = n - 1;
        let coeffs = (0..n)
            .map(|j| {
                let mut s = C64::new(0.0, 0.0);
                for (k, &f) in samples.iter().enumerate() {
                    let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                    let phase = (j * k) % (2 * m);
                    s += f * (w * (std::f64::consts::PI * phase as f64 / m as f64).cos());
                }
                let scale = if j == 0 || j == m { 1.0 } else { 2.0 };
                s * (scale / m as f64)
            })
            .collect::<Vec<C64>>();
        // Coefficients at the roundoff floor carry only sample noise, which the
        // Taylor conversion would amplify; drop them.
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let floor = 32.0 * f64::EPSILON * scale;
        let keep = coeffs.iter().rposition(|c| c.norm() > floor).map_or(1, |i| i + 1);
        let coeffs =
            coeffs.into_iter().enumerate().map(|(i, c)| if i < keep { c } else { C64::new(0.0, 0.0) }).collect();
        Ok(Chebyshev { halfwidth, coeffs })
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> C64 {
        let u = x / self.halfwidth;
        let mut b1 = C64::new(0.0, 0.0);
        let mut b2 = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + b1 * (2.0 * u) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + b1 * u - b2
    }

    /// Taylor coefficients at 0 (value, first derivative, second/2!, ...),
    /// up to and including `order`.
    pub fn taylor(&self, order: usize) -> Vec<C64> {
        let n = self.coeffs.len();
        // Monomial coefficients of T_k, built by T_{k+1} = 2u T_k − T_{k−1}.
        let mut prev = vec![0.0; n + 1];
        let mut cur = vec![0.0; n + 1];
        prev[0] = 1.0;
        if n > 1 {
            cur[1] = 1.0;
        }
        let mut out = vec![C64::new(0.0, 0.0); order + 1];
        let mut add = |t: &[f64], c: C64| {
            for (j, o) in out.iter_mut().enumerate() {
                if j < t.len() && t[j] != 0.0 {
                    *o += c * t[j];
                }
            }
        };
        add(&prev, self.coeffs[0]);
        if n > 1 {
            add(&cur, self.coeffs[1]);
        }
        for k in 2..n {
            let mut next = vec![0.0; n + 1];
            for j in 0..n {
                next[j + 1] += 2.0 * cur[j];
            }
            for j in 0..=n {
                next[j] -= prev[j];
            }
            add(&next, self.coeffs[k]);
            prev = cur;
            cur = next;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o /= self.halfwidth.powi(j as i32);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_jet() {
        let a = 0.4;
        let nodes = lobatto_nodes(a, DEFAULT_NODES);
        assert_eq!(nodes[16], 0.0);
        let samples: Vec<C64> = nodes.iter().map(|&x| C64::new((2.0 * x).cos(), (3.0 * x).sin())).collect();
        let cheb = Chebyshev::from_lobatto(a, &samples).unwrap();
        for x in check_points(a, DEFAULT_NODES) {
            assert!((cheb.eval(x) - C64::new((2.0 * x).cos(), (3.0 * x).sin())).norm() < 1e-14);
        }
        let t = cheb.taylor(6);
        let expect = [
            (1.0, 0.0),
            (0.0, 3.0),
            (-2.0, 0.0),
            (0.0, -4.5),
            (2.0 / 3.0, 0.0),
            (0.0, 243.0 / 120.0),
            (-64.0 / 720.0, 0.0),
        ];
        for (j, (re, im)) in expect.iter().enumerate() {
            assert!((t[j] - C64::new(*re, *im)).norm() < 1e-9 * (1.0 + re.abs() + im.abs()), "j={j}: {:?}", t[j]);
        }
    }
}
