//! Bernstein coefficients on the unit box.
//!
//! Tensors are dense and row-major over all `I ≤ δ`: the last axis varies
//! fastest, so iteration order is lexicographic in `I`.

use num_bigint::BigInt;
use num_traits::{One, Pow};

use crate::binomial::binomial;
use crate::error::{Error, Result};
use crate::poly::{Degree, MultiIndex, Polynomial};
use crate::scalar::Scalar;

/// Index arithmetic for a dense tensor over `I ≤ δ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorShape {
    degree: Degree,
    strides: Vec<usize>,
    len: usize,
}

impl TensorShape {
    pub fn new(degree: Degree) -> Self {
        let n = degree.len();
        let mut strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * (degree.0[j + 1] as usize + 1);
        }
        let len = degree.0.iter().map(|&d| d as usize + 1).product();
        TensorShape { degree, strides, len }
    }

    pub fn degree(&self) -> &Degree {
        &self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn linear(&self, idx: &[u32]) -> usize {
        idx.iter().zip(&self.strides).map(|(&i, &s)| i as usize * s).sum()
    }

    pub fn multi(&self, mut pos: usize) -> MultiIndex {
        let mut v = vec![0u32; self.dim()];
        for (j, &s) in self.strides.iter().enumerate() {
            v[j] = (pos / s) as u32;
            pos %= s;
        }
        MultiIndex(v)
    }

    /// All indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.len).map(move |p| self.multi(p))
    }

    /// Applies the square matrix `mats[j]` (size `(δ_j+1)²`) along every
    /// axis: `out = (M_1 ⊗ … ⊗ M_n) v`.
    pub fn apply_axiswise<S: Scalar>(&self, v: &[S], mats: &[Vec<Vec<S>>]) -> Vec<S> {
        let mut cur = v.to_vec();
        for (j, m) in mats.iter().enumerate() {
            let size = self.degree.0[j] as usize + 1;
            let stride = self.strides[j];
            let block = stride * size;
            let mut next = vec![S::zero(); self.len];
            for base in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    for (r, row) in m.iter().enumerate() {
                        let mut acc = S::zero();
                        for (c, a) in row.iter().enumerate() {
                            if a.is_zero() {
                                continue;
                            }
                            let x = &cur[base + c * stride + inner];
                            if !x.is_zero() {
                                acc = acc + a.clone() * x.clone();
                            }
                        }
                        next[base + r * stride + inner] = acc;
                    }
                }
            }
            cur = next;
        }
        cur
    }
}

/// `p = Σ_{I≤δ} b_I B_{I,δ}` on `[0,1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinForm<S> {
    pub shape: TensorShape,
    pub coeffs: Vec<S>,
    /// Degree of the polynomial the form was built from.
    pub source_degree: Degree,
}

impl<S: Scalar> BernsteinForm<S> {
    pub fn degree(&self) -> &Degree {
        self.shape.degree()
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> &S {
        &self.coeffs[self.shape.linear(&idx.0)]
    }

    pub fn max_coefficient(&self) -> S {
        self.coeffs
            .iter()
            .cloned()
            .reduce(S::max_of)
            .unwrap_or_else(S::zero)
    }

    /// Monomial coefficients of the represented polynomial.
    pub fn to_monomial(&self) -> Polynomial<S> {
        let mats: Vec<Vec<Vec<S>>> = self.degree().0.iter().map(|&d| bernstein_to_power(d)).collect();
        let dense = self.shape.apply_axiswise(&self.coeffs, &mats);
        let terms = dense
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(p, c)| (self.shape.multi(p).0, c));
        Polynomial::from_terms(self.dim(), terms)
            .and_then(|p| p.with_degree(self.degree().clone()))
            .expect("indices lie within the tensor")
    }
}

/// Dense power-to-Bernstein matrix for one axis: `M[i][j] = C(i,j)/C(d,j)`.
fn power_to_bernstein<S: Scalar>(d: u32) -> Vec<Vec<S>> {
    (0..=d)
        .map(|i| {
            (0..=d)
                .map(|j| {
                    if j > i {
                        S::zero()
                    } else {
                        S::from_u128_ratio(binomial(i, j), binomial(d, j))
                    }
                })
                .collect()
        })
        .collect()
}

/// Inverse of [`power_to_bernstein`]: `p_j = Σ_{i≤j} (−1)^{j−i} C(d,j) C(j,i) b_i`.
fn bernstein_to_power<S: Scalar>(d: u32) -> Vec<Vec<S>> {
    (0..=d)
        .map(|j| {
            (0..=d)
                .map(|i| {
                    if i > j {
                        return S::zero();
                    }
                    let mag = S::from_u128_ratio(binomial(d, j) * binomial(j, i), 1);
                    if (j - i) % 2 == 0 {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect()
        })
        .collect()
}

fn check_degree<S: Scalar>(p: &Polynomial<S>, delta: &Degree) -> Result<()> {
    if delta.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: delta.len(),
        });
    }
    let support = p.support_degree();
    if !support.le(delta) {
        return Err(Error::DegreeTooSmall {
            requested: delta.0.clone(),
            required: support.0,
        });
    }
    Ok(())
}

/// `b_{I,δ} = Σ_{J≤I} C(I,J)/C(δ,J) p_J`, applied one axis at a time.
pub fn to_bernstein<S: Scalar>(p: &Polynomial<S>, delta: &Degree) -> Result<BernsteinForm<S>> {
    check_degree(p, delta)?;
    let shape = TensorShape::new(delta.clone());
    let mut dense = vec![S::zero(); shape.len()];
    for (idx, c) in p.terms() {
        dense[shape.linear(&idx.0)] = c.clone();
    }
    let mats: Vec<Vec<Vec<S>>> = delta.0.iter().map(|&d| power_to_bernstein(d)).collect();
    let coeffs = shape.apply_axiswise(&dense, &mats);
    Ok(BernsteinForm {
        shape,
        coeffs,
        source_degree: p.degree().clone(),
    })
}

/// Tensor de Casteljau. Points outside `[0,1]^n` are rejected.
pub fn bernstein_eval<S: Scalar>(bf: &BernsteinForm<S>, x: &[S]) -> Result<S> {
    if x.len() != bf.dim() {
        return Err(Error::DimensionMismatch {
            expected: bf.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| *v < S::zero() || *v > S::one()) {
        return Err(Error::OutsideUnitBox(x.iter().map(|v| v.to_f64()).collect()));
    }
    let mut cur = bf.coeffs.clone();
    let mut rest = bf.len();
    for (j, xj) in x.iter().enumerate() {
        let size = bf.degree().0[j] as usize + 1;
        rest /= size;
        let one_minus = S::one() - xj.clone();
        // cur is (size × rest); collapse the leading axis.
        for level in (1..size).rev() {
            for k in 0..level {
                for r in 0..rest {
                    let a = cur[k * rest + r].clone();
                    let b = cur[(k + 1) * rest + r].clone();
                    cur[k * rest + r] = one_minus.clone() * a + xj.clone() * b;
                }
            }
        }
        cur.truncate(rest);
    }
    Ok(cur.into_iter().next().unwrap_or_else(S::zero))
}

/// `β_{i,d}(x)` for `i = 0..=d`.
pub fn univariate_basis<S: Scalar>(d: u32, x: &S) -> Vec<S> {
    let one_minus = S::one() - x.clone();
    (0..=d)
        .map(|i| {
            let mut v = S::from_u128_ratio(binomial(d, i), 1);
            for _ in 0..i {
                v = v * x.clone();
            }
            for _ in i..d {
                v = v * one_minus.clone();
            }
            v
        })
        .collect()
}

/// `B_{I,δ}(x)` for every `I ≤ δ`, in storage order.
pub fn basis_values<S: Scalar>(delta: &Degree, x: &[S]) -> Vec<S> {
    let per_axis: Vec<Vec<S>> = delta.0.iter().zip(x).map(|(&d, xj)| univariate_basis(d, xj)).collect();
    outer_product(&per_axis)
}

/// Row-major outer product of per-axis vectors.
pub fn outer_product<S: Scalar>(factors: &[Vec<S>]) -> Vec<S> {
    let mut out = vec![S::one()];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * f.len());
        for a in &out {
            for b in f {
                next.push(a.clone() * b.clone());
            }
        }
        out = next;
    }
    out
}

/// Exact `β_{i,d}(i/d) = C(d,i) i^i (d−i)^{d−i} / d^d` (factor 1 when `d = 0`).
pub fn univariate_upper_bound<S: Scalar>(i: u32, d: u32) -> S {
    if d == 0 || i == 0 || i == d {
        return S::one();
    }
    let num = BigInt::from(binomial(d, i))
        * Pow::pow(BigInt::from(i), i)
        * Pow::pow(BigInt::from(d - i), d - i);
    let den: BigInt = Pow::pow(BigInt::from(d), d);
    debug_assert!(!den.is_one() || num.is_one());
    S::from_big_ratio(&num, &den)
}

/// `u_I = B_{I,δ}(I/δ)`, the pointwise maximum of each basis polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundVector<S> {
    pub shape: TensorShape,
    pub u: Vec<S>,
}

pub fn upper_bounds<S: Scalar>(delta: &Degree) -> UpperBoundVector<S> {
    let per_axis: Vec<Vec<S>> = delta
        .0
        .iter()
        .map(|&d| (0..=d).map(|i| univariate_upper_bound(i, d)).collect())
        .collect();
    UpperBoundVector {
        shape: TensorShape::new(delta.clone()),
        u: outer_product(&per_axis),
    }
}

/// Bernstein coefficients of `β_{i,k}` at degree `d`:
/// `C(k,i) C(d−k, j−i) / C(d,j)` for `i ≤ j ≤ i + d − k`.
pub fn univariate_elevation<S: Scalar>(i: u32, k: u32, d: u32) -> Vec<S> {
    (0..=d)
        .map(|j| {
            if j < i || j > i + (d - k) {
                S::zero()
            } else {
                S::from_u128_ratio(binomial(k, i) * binomial(d - k, j - i), binomial(d, j))
            }
        })
        .collect()
}

fn check_elevation(i: &MultiIndex, k: &Degree, delta: &Degree) -> Result<()> {
    if i.len() != delta.len() || k.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            expected: delta.len(),
            got: if i.len() != delta.len() { i.len() } else { k.len() },
        });
    }
    if !i.le(k) || !k.le(delta) {
        return Err(Error::IndexOutOfRange(format!("need {i} <= {k} <= {delta}")));
    }
    Ok(())
}

/// Per-axis factors of [`elevation_row`]; the row is their outer product.
pub fn elevation_factors<S: Scalar>(i: &MultiIndex, k: &Degree, delta: &Degree) -> Result<Vec<Vec<S>>> {
    check_elevation(i, k, delta)?;
    Ok((0..delta.len())
        .map(|j| univariate_elevation(i.0[j], k.0[j], delta.0[j]))
        .collect())
}

/// Coefficients of `B_{I,K}` in the degree-`δ` basis. Since both the
/// polynomial and the basis factor over axes, the row is the outer product of
/// univariate elevations.
pub fn elevation_row<S: Scalar>(i: &MultiIndex, k: &Degree, delta: &Degree) -> Result<Vec<S>> {
    Ok(outer_product(&elevation_factors(i, k, delta)?))
}

/// Coefficients of `x^I` at degree `δ`: `C(J,I)/C(δ,I)` for `J ≥ I`.
pub fn monomial_bernstein_row<S: Scalar>(i: &MultiIndex, delta: &Degree) -> Result<Vec<S>> {
    if i.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            expected: delta.len(),
            got: i.len(),
        });
    }
    if !i.le(delta) {
        return Err(Error::IndexOutOfRange(format!("{i} exceeds {delta}")));
    }
    let per_axis: Vec<Vec<S>> = (0..delta.len())
        .map(|a| {
            let (ia, da) = (i.0[a], delta.0[a]);
            (0..=da)
                .map(|j| {
                    if j < ia {
                        S::zero()
                    } else {
                        S::from_u128_ratio(binomial(j, ia), binomial(da, ia))
                    }
                })
                .collect()
        })
        .collect();
    Ok(outer_product(&per_axis))
}

/// Smallest coefficient and its index; ties go to the lexicographically
/// smallest index.
pub fn min_coefficient<S: Scalar>(bf: &BernsteinForm<S>) -> (S, MultiIndex) {
    let mut best = 0;
    for (p, c) in bf.coeffs.iter().enumerate().skip(1) {
        if *c < bf.coeffs[best] {
            best = p;
        }
    }
    (bf.coeffs[best].clone(), bf.shape.multi(best))
}

/// True when every coordinate of `i_star` is `0` or `δ_j`, in which case the
/// coefficient there is attained by the polynomial at a box corner.
pub fn vertex_condition<S: Scalar>(bf: &BernsteinForm<S>, i_star: &MultiIndex) -> bool {
    i_star.le(bf.degree()) && i_star.is_vertex_of(bf.degree())
}
