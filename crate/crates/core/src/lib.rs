//! Forward and inverse spectral problems for `y^(n) + Σ p_k y^(k) = λ y` on
//! `[0, 1]` with distribution coefficient `p_0 = σ'`.
//!
//! The forward side computes eigenvalues and weight numbers of the `n - 1`
//! boundary-value problems; the inverse side reconstructs the coefficients
//! from perturbed spectral data by solving the main equation on a grid.

pub mod error;
pub mod forward;
pub mod funcspace;
pub mod harness;
pub mod inverse;
mod par;
pub mod quasidiff;

pub use error::{Condition, Error, Result};
pub use num_complex::Complex64;
