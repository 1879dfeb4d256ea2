//! Sparse multivariate polynomials in the monomial basis, boxes, and the
//! affine change of variables onto `[0,1]^n`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::binomial::binomial;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponent vector `(i_1, ..., i_n)`. Also used for degree vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

/// Per-variable maximal degree `(δ_1, ..., δ_n)`.
pub type Degree = MultiIndex;

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, axis: usize) -> Self {
        let mut v = vec![0; n];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn uniform(n: usize, d: u32) -> Self {
        MultiIndex(vec![d; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn join(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Product of binomials `C(self, other)`; zero unless `other <= self`.
    pub fn binomial(&self, other: &MultiIndex) -> u128 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&n, &k)| binomial(n, k))
            .product()
    }

    /// `I / δ` with the convention `0/0 = 0`.
    pub fn ratio(&self, degree: &MultiIndex) -> Vec<f64> {
        self.0
            .iter()
            .zip(&degree.0)
            .map(|(&i, &d)| if d == 0 { 0.0 } else { i as f64 / d as f64 })
            .collect()
    }

    /// Every coordinate sits at `0` or at `degree_j`.
    pub fn is_vertex_of(&self, degree: &MultiIndex) -> bool {
        self.0.iter().zip(&degree.0).all(|(&i, &d)| i == 0 || i == d)
    }

    /// `I_{r,k}`: shift coordinate `r` by `k`. `None` if it would go negative.
    pub fn shifted(&self, r: usize, k: i64) -> Option<MultiIndex> {
        let mut v = self.0.clone();
        let shifted = v[r] as i64 + k;
        if shifted < 0 {
            return None;
        }
        v[r] = shifted as u32;
        Some(MultiIndex(v))
    }

    fn without(&self, axis: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v.remove(axis);
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Axis-aligned box `[lower_1, upper_1] x ... x [lower_n, upper_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidBox(format!("axis {j} has a non-finite bound")));
            }
            if lo >= hi {
                return Err(Error::InvalidBox(format!(
                    "axis {j}: lower {lo} is not below upper {hi}"
                )));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn unit(n: usize) -> Self {
        BoxDomain {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn affine_map(&self) -> AffineMap {
        AffineMap {
            offset: self.lower.clone(),
            scale: (0..self.dim()).map(|j| self.width(j)).collect(),
        }
    }

    /// The box with `axis` removed.
    pub fn without_axis(&self, axis: usize) -> BoxDomain {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.remove(axis);
        upper.remove(axis);
        BoxDomain { lower, upper }
    }

    /// Splits `axis` at `at`, which must lie strictly inside the edge.
    pub fn split_at(&self, axis: usize, at: f64) -> (BoxDomain, BoxDomain) {
        let mut left = self.clone();
        let mut right = self.clone();
        left.upper[axis] = at;
        right.lower[axis] = at;
        (left, right)
    }
}

/// `x_j = offset_j + scale_j * z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap {
            offset: vec![0.0; n],
            scale: vec![1.0; n],
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(z, (o, s))| o + s * z)
            .collect()
    }

    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(x, (o, s))| (x - o) / s)
            .collect()
    }
}

/// Side of a box edge used when fixing a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// `p(x) = Σ_I p_I x^I`, stored sparsely. Zero coefficients are never kept,
/// and every stored index is `<= degree`.
#[derive(Debug, Clone)]
pub struct Polynomial<S> {
    dim: usize,
    terms: BTreeMap<MultiIndex, S>,
    degree: Degree,
}

/// Equal as functions: the declared degree is a bookkeeping bound and
/// does not take part.
impl<S: PartialEq> PartialEq for Polynomial<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.terms == other.terms
    }
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
            degree: MultiIndex::zeros(dim),
        }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        let mut p = Self::zero(dim);
        p.insert(MultiIndex::zeros(dim), c);
        p
    }

    /// The coordinate polynomial `x_axis`.
    pub fn variable(dim: usize, axis: usize) -> Self {
        let mut p = Self::zero(dim);
        p.insert(MultiIndex::unit(dim, axis), S::one());
        p.degree = MultiIndex::unit(dim, axis);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, S)>,
    {
        let mut p = Self::zero(dim);
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: exps.len(),
                });
            }
            p.accumulate(MultiIndex(exps), c);
        }
        p.degree = p.support_degree();
        Ok(p)
    }

    fn insert(&mut self, idx: MultiIndex, c: S) {
        if c.is_zero() {
            self.terms.remove(&idx);
        } else {
            self.degree = self.degree.join(&idx);
            self.terms.insert(idx, c);
        }
    }

    fn accumulate(&mut self, idx: MultiIndex, c: S) {
        let sum = match self.terms.remove(&idx) {
            Some(old) => old + c,
            None => c,
        };
        self.insert(idx, sum);
    }

    /// Componentwise maximum over the stored exponents.
    pub fn support_degree(&self) -> Degree {
        self.terms
            .keys()
            .fold(MultiIndex::zeros(self.dim), |acc, k| acc.join(k))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> &Degree {
        &self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> S {
        self.terms.get(idx).cloned().unwrap_or_else(S::zero)
    }

    /// Declares a larger degree vector. Fails if `degree` does not dominate
    /// the support.
    pub fn with_degree(mut self, degree: Degree) -> Result<Self> {
        let support = self.support_degree();
        if degree.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: degree.len(),
            });
        }
        if !support.le(&degree) {
            return Err(Error::DegreeTooSmall {
                requested: degree.0,
                required: support.0,
            });
        }
        self.degree = degree;
        Ok(self)
    }

    fn check_dim(&self, other_dim: usize) -> Result<()> {
        if self.dim != other_dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other_dim,
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[S]) -> Result<S> {
        self.check_dim(x.len())?;
        // powers[j][k] = x_j^k
        let powers: Vec<Vec<S>> = x
            .iter()
            .zip(&self.degree.0)
            .map(|(xj, &d)| {
                let mut row = Vec::with_capacity(d as usize + 1);
                row.push(S::one());
                for k in 1..=d as usize {
                    let next = row[k - 1].clone() * xj.clone();
                    row.push(next);
                }
                row
            })
            .collect();
        let mut acc = S::zero();
        for (idx, c) in &self.terms {
            let mut term = c.clone();
            for (j, &e) in idx.0.iter().enumerate() {
                if e > 0 {
                    term = term * powers[j][e as usize].clone();
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Evaluates at a binary64 point, converting it into the scalar field.
    pub fn eval_f64(&self, x: &[f64]) -> Result<S> {
        let xs: Vec<S> = x.iter().map(|&v| S::from_f64(v)).collect();
        self.eval(&xs)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.accumulate(idx.clone(), c.clone());
        }
        out.degree = self.degree.join(&other.degree);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            let mut z = Self::zero(self.dim);
            z.degree = self.degree.clone();
            return z;
        }
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.clone() * c.clone()))
                .collect(),
            degree: self.degree.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = Self::zero(self.dim);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.accumulate(a.add(b), ca.clone() * cb.clone());
            }
        }
        out.degree = self.degree.add(&other.degree);
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.dim, S::one());
        for _ in 0..k {
            out = out.mul(self).expect("same dimension");
        }
        out
    }

    /// Formal `∂p/∂x_axis`; the declared degree drops by one on that axis.
    pub fn partial_derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.dim {
            return Err(Error::IndexOutOfRange(format!(
                "axis {axis} for dimension {}",
                self.dim
            )));
        }
        let mut out = Self::zero(self.dim);
        for (idx, c) in &self.terms {
            let e = idx.0[axis];
            if e == 0 {
                continue;
            }
            let mut lowered = idx.clone();
            lowered.0[axis] -= 1;
            out.accumulate(lowered, c.clone() * S::from_i64(e as i64));
        }
        let mut degree = self.degree.clone();
        degree.0[axis] = degree.0[axis].saturating_sub(1);
        out.degree = degree;
        Ok(out)
    }

    /// `∇V · f` for the vector field `f`.
    pub fn lie_derivative(&self, field: &[Polynomial<S>]) -> Result<Self> {
        self.check_dim(field.len())?;
        let mut out = Self::zero(self.dim);
        for (r, fr) in field.iter().enumerate() {
            self.check_dim(fr.dim)?;
            let term = self.partial_derivative(r)?.mul(fr)?;
            out = out.add(&term)?;
        }
        out.degree = out.support_degree();
        Ok(out)
    }

    /// Substitutes `x_axis = offset + scale * z_axis` by binomial expansion,
    /// keeping the declared degree.
    pub fn compose_affine_axis(&self, axis: usize, offset: &S, scale: &S) -> Self {
        let mut out = Self::zero(self.dim);
        let d = self.degree.0[axis];
        let mut offset_pow = vec![S::one()];
        let mut scale_pow = vec![S::one()];
        for k in 1..=d as usize {
            offset_pow.push(offset_pow[k - 1].clone() * offset.clone());
            scale_pow.push(scale_pow[k - 1].clone() * scale.clone());
        }
        for (idx, c) in &self.terms {
            let e = idx.0[axis];
            for m in 0..=e {
                let factor = S::from_u128_ratio(binomial(e, m), 1)
                    * offset_pow[(e - m) as usize].clone()
                    * scale_pow[m as usize].clone();
                if factor.is_zero() {
                    continue;
                }
                let mut target = idx.clone();
                target.0[axis] = m;
                out.accumulate(target, c.clone() * factor);
            }
        }
        out.degree = self.degree.clone();
        out
    }

    /// Returns `q(z) = p(offset + scale∘z)` on `[0,1]^n` and the map used.
    pub fn to_unit_box(&self, domain: &BoxDomain) -> Result<(Self, AffineMap)> {
        self.check_dim(domain.dim())?;
        let map = domain.affine_map();
        let mut q = self.clone();
        for j in 0..self.dim {
            if map.offset[j] == 0.0 && map.scale[j] == 1.0 {
                continue;
            }
            q = q.compose_affine_axis(j, &S::from_f64(map.offset[j]), &S::from_f64(map.scale[j]));
        }
        Ok((q, map))
    }

    /// Substitutes `x_axis = value` and removes the variable.
    pub fn restrict(&self, axis: usize, value: &S) -> Result<Self> {
        if axis >= self.dim {
            return Err(Error::IndexOutOfRange(format!(
                "axis {axis} for dimension {}",
                self.dim
            )));
        }
        let d = self.degree.0[axis];
        let mut powers = vec![S::one()];
        for k in 1..=d as usize {
            powers.push(powers[k - 1].clone() * value.clone());
        }
        let mut out = Self::zero(self.dim - 1);
        for (idx, c) in &self.terms {
            let e = idx.0[axis] as usize;
            out.accumulate(idx.without(axis), c.clone() * powers[e].clone());
        }
        out.degree = self.degree.without(axis);
        Ok(out)
    }

    /// Fixes `x_axis` at the lower or upper bound of `domain`.
    pub fn restrict_facet(&self, axis: usize, side: Side, domain: &BoxDomain) -> Result<Self> {
        self.check_dim(domain.dim())?;
        let value = match side {
            Side::Lower => domain.lower()[axis],
            Side::Upper => domain.upper()[axis],
        };
        self.restrict(axis, &S::from_f64(value))
    }

    /// Converts every coefficient into another scalar field.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Polynomial<T> {
        let mut out = Polynomial::<T>::zero(self.dim);
        for (k, v) in &self.terms {
            out.insert(k.clone(), f(v));
        }
        out.degree = self.degree.clone();
        out
    }
}

impl<S: Scalar> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.terms.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (j, &e) in idx.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", j + 1)?,
                    _ => write!(f, "*x{}^{e}", j + 1)?,
                }
            }
        }
        Ok(())
    }
}
