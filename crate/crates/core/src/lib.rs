//! Studentized U-statistics: exact computation, the algebraic decomposition
//! of the Studentized statistic, the representation of the jackknife
//! variance as a U-statistic, Berry-Esseen bound evaluators, Stein solutions
//! and a seeded Monte Carlo harness that checks the bounds empirically.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod combinatorics;
pub mod decomposition;
pub mod distributions;
pub mod error;
pub mod extended;
pub mod kernels;
pub mod mc;
pub mod sigma_hat;
pub mod special;
pub mod stein;
pub mod ustat;

pub use error::{Error, Result};
