//! Bannai-Ito polynomials and the Racah problem of the sl₋₁(2) algebra.
//!
//! Closed forms are computed in exact rational arithmetic. An independent
//! numerical oracle builds the parabosonic representations directly and
//! diagonalizes the intermediate Casimir operators, so the two routes can be
//! compared.

pub mod bi_algebra;
pub mod bi_polynomials;
pub mod error;
pub mod linalg;
pub mod racah;
pub mod scalars;
pub mod sl_rep_oracle;

pub use error::{Error, Result};
pub use scalars::{Float, Rational};
