#![allow(dead_code)]

use bernpop::lyapunov::benchmark;
use bernpop::problem::Problem;
use bernpop::{MultiIndex, Polynomial, Scalar};
use proptest::prelude::*;

/// A polynomial with small integer coefficients and a degree bound `delta`
/// covering its support.
#[derive(Debug, Clone)]
pub struct RandomPoly {
    pub delta: Vec<u32>,
    pub terms: Vec<(Vec<u32>, i64)>,
}

impl RandomPoly {
    pub fn dim(&self) -> usize {
        self.delta.len()
    }

    pub fn degree(&self) -> MultiIndex {
        MultiIndex(self.delta.clone())
    }

    pub fn build<S: Scalar>(&self) -> Polynomial<S> {
        Polynomial::from_terms(
            self.dim(),
            self.terms.iter().map(|(e, c)| (e.clone(), S::from_i64(*c))),
        )
        .unwrap()
    }
}

pub fn random_poly(max_dim: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = RandomPoly> {
    (1..=max_dim)
        .prop_flat_map(move |n| proptest::collection::vec(1..=max_deg, n))
        .prop_flat_map(move |delta| {
            let exps: Vec<_> = delta.iter().map(|&d| 0..=d).collect();
            let terms = proptest::collection::vec((exps, -9i64..=9), 1..=max_terms);
            (Just(delta), terms)
        })
        .prop_map(|(delta, terms)| RandomPoly { delta, terms })
}

/// Points in `[0,1]^n`.
pub fn unit_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..=1.0f64, n)
}

/// Minimum over a uniform grid with `k` points per axis on `[0,1]^n`.
pub fn grid_min(p: &Polynomial<f64>, k: usize) -> f64 {
    let n = p.dim();
    let mut idx = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64 / (k - 1) as f64).collect();
        best = best.min(p.eval(&x).unwrap());
        let mut j = n;
        loop {
            if j == 0 {
                return best;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < k {
                break;
            }
            idx[j] = 0;
        }
    }
}

pub fn bundled<S: Scalar>(name: &str) -> Problem<S> {
    benchmark(name).unwrap().spec.build().unwrap()
}
