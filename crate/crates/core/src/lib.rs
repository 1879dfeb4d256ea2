//! Lower bounds and global minima of multivariate polynomials over boxes,
//! via linear relaxations in the Bernstein basis.
//!
//! The pipeline is: [`poly::Polynomial`] → [`bernstein::to_bernstein`] →
//! one of the relaxations in [`relax`] → optionally [`bnb::branch_and_bound`].
//! Every layer is generic over [`Scalar`] so that the same code runs in
//! binary64 and in exact rational arithmetic.

pub mod bernstein;
pub mod binomial;
pub mod bnb;
pub mod cli;
pub mod error;
pub mod lp;
pub mod lyapunov;
pub mod poly;
pub mod problem;
pub mod relax;
pub mod report;
pub mod scalar;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
pub use poly::{AffineMap, BoxDomain, Degree, MultiIndex, Polynomial, Side};
pub use scalar::{Rational, Scalar};
