//! Polynomials shared by unit tests, built from their defining formulas.

use crate::poly::Polynomial;
use crate::scalar::{Rational, Scalar};

fn c<S: Scalar>(dim: usize, v: i64) -> Polynomial<S> {
    Polynomial::constant(dim, S::from_i64(v))
}

/// `(x1² + x2 − 11)² + (x1 + x2² − 7)²`
pub fn himmelblau<S: Scalar>() -> Polynomial<S> {
    let x1 = Polynomial::<S>::variable(2, 0);
    let x2 = Polynomial::<S>::variable(2, 1);
    let a = x1.pow(2).add(&x2).unwrap().add(&c(2, -11)).unwrap();
    let b = x1.add(&x2.pow(2)).unwrap().add(&c(2, -7)).unwrap();
    a.pow(2).add(&b.pow(2)).unwrap()
}

pub fn himmelblau_rational() -> Polynomial<Rational> {
    himmelblau()
}

/// `Σ x_j²` in `n` variables.
pub fn sum_of_squares<S: Scalar>(n: usize) -> Polynomial<S> {
    let mut p = Polynomial::zero(n);
    for j in 0..n {
        p = p.add(&Polynomial::variable(n, j).pow(2)).unwrap();
    }
    p
}
