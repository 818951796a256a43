//! Numerics for mixing rates of skew products `F(x, t) = (σx, t + f(x))`
//! over subshifts of finite type: Gibbs measures, twisted transfer operators,
//! correlation asymptotics and the reduction of two-sided data.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod chebyshev;
pub mod cohomology;
pub mod config;
pub mod correlations;
pub mod error;
pub mod fiber;
pub mod gibbs;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod pipeline;
pub mod quadrature;
pub mod sft;
pub mod twisted;
pub mod window;

pub use error::{Error, Result};
pub use sft::C64;
