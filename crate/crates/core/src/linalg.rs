//! Dense complex eigen-solvers used by the transfer-operator modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sft::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance on successive eigenvalue estimates.
pub const POWER_TOL: f64 = 1e-14;
/// Iteration cap for power iteration.
pub const POWER_CAP: usize = 100_000;

/// Leading eigenvalue with right and left eigenvectors, normalized so that
/// `left^T right = 1` (bilinear pairing, no conjugation).
#[derive(Clone, Debug)]
pub struct EigenTriple {
    pub lambda: C64,
    pub right: CVector,
    pub left: CVector,
    pub iterations: usize,
}

/// All eigenvalues of a square complex matrix, sorted by decreasing modulus.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let schur = m.clone().try_schur(f64::EPSILON, 10_000).ok_or(Error::NonConvergence(10_000))?;
    let ev = schur.eigenvalues().ok_or(Error::NonConvergence(10_000))?;
    let mut v: Vec<C64> = ev.iter().copied().collect();
    v.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(v)
}

pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.first().map_or(0.0, |z| z.norm()))
}

/// Index of the entry of largest modulus, taking the first of any near-ties
/// so that the choice is stable under rounding.
fn anchor_index(v: &CVector) -> usize {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    v.iter().position(|z| z.norm() >= max * (1.0 - 1e-8)).unwrap_or(0)
}

/// Scale `v` to unit 2-norm with its anchor entry real and positive.
pub fn phase_normalize(v: &mut CVector) {
    let k = anchor_index(v);
    let a = v[k];
    if a.norm() == 0.0 {
        return;
    }
    let phase = a / a.norm();
    let scale = phase.conj() / v.norm();
    v.iter_mut().for_each(|z| *z *= scale);
}

fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Power iteration for the dominant eigenvector of `m` (or of `m^T` when
/// `transpose` is set), from the given start vector.
fn dominant_vector(m: &CMatrix, start: CVector, transpose: bool) -> Result<(C64, CVector, usize)> {
    let d = m.nrows();
    let scale = inf_norm(m).max(f64::MIN_POSITIVE);
    let mut v = start;
    if v.norm() == 0.0 {
        v = CVector::from_element(d, C64::new(1.0, 0.0));
    }
    phase_normalize(&mut v);
    let mut w = CVector::zeros(d);
    let mut lambda_prev = C64::new(f64::NAN, 0.0);
    let mut settled = 0;
    for it in 1..=POWER_CAP {
        if transpose {
            m.tr_mul_to(&v, &mut w);
        } else {
            m.mul_to(&v, &mut w);
        }
        let lambda = v.dotc(&w);
        let residual = (&w - &v * lambda).norm();
        let change = (lambda - lambda_prev).norm();
        let small_change = change <= POWER_TOL * lambda.norm().max(f64::MIN_POSITIVE);
        let small_residual = residual <= 1e-14 * (d as f64).sqrt().max(1.0) * scale.max(lambda.norm());
        if small_change && small_residual {
            settled += 1;
            if settled >= 2 {
                return Ok((lambda, v, it));
            }
        } else {
            settled = 0;
        }
        lambda_prev = lambda;
        if w.norm() == 0.0 {
            return Err(Error::Degenerate("matrix annihilates the iterate".into()));
        }
        std::mem::swap(&mut v, &mut w);
        phase_normalize(&mut v);
    }
    Err(Error::NonConvergence(POWER_CAP))
}

/// Leading eigen-triple by power iteration with an optional warm start,
/// finished by a two-sided Rayleigh quotient.
pub fn power_eigen(m: &CMatrix, warm: Option<(&CVector, &CVector)>) -> Result<EigenTriple> {
    let d = m.nrows();
    let ones = CVector::from_element(d, C64::new(1.0, 0.0));
    let (r0, l0) = match warm {
        Some((r, l)) if r.len() == d && l.len() == d => (r.clone(), l.clone()),
        _ => (ones.clone(), ones),
    };
    let (_, mut right, it_r) = dominant_vector(m, r0, false)?;
    let (_, mut left, it_l) = dominant_vector(m, l0, true)?;
    phase_normalize(&mut right);
    let pairing = left.dot(&right);
    if pairing.norm() < 1e-300 {
        return Err(Error::Degenerate("left and right eigenvectors are orthogonal".into()));
    }
    left /= pairing;
    let lambda = left.dot(&(m * &right));
    Ok(EigenTriple { lambda, right, left, iterations: it_r.max(it_l) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn power_matches_dense_solver() {
        let m = CMatrix::from_row_slice(
            4,
            4,
            &[
                c(0.4, 0.1),
                c(0.3, 0.0),
                c(0.1, -0.2),
                c(0.0, 0.0),
                c(0.2, 0.0),
                c(0.5, 0.0),
                c(0.0, 0.1),
                c(0.2, 0.0),
                c(0.1, 0.0),
                c(0.0, 0.0),
                c(0.6, 0.0),
                c(0.3, 0.1),
                c(0.3, -0.1),
                c(0.1, 0.0),
                c(0.0, 0.0),
                c(0.5, 0.0),
            ],
        );
        let ev = eigenvalues(&m).unwrap();
        let t = power_eigen(&m, None).unwrap();
        assert!((t.lambda - ev[0]).norm() < 1e-10, "{:?} vs {:?}", t.lambda, ev[0]);
        assert!((&m * &t.right - &t.right * t.lambda).norm() < 1e-10);
        assert!((m.transpose() * &t.left - &t.left * t.lambda).norm() < 1e-10);
        assert!((t.left.dot(&t.right) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn stochastic_matrix_has_unit_eigenvalue() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let t = power_eigen(&m, None).unwrap();
        assert!((t.lambda - c(1.0, 0.0)).norm() < 1e-15);
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-14);
    }
}
