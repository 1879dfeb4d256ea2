//! LP relaxations over the Bernstein placeholder variables `z_I ≈ B_{I,δ}(x)`.
//!
//! Level 0 is the smallest coefficient. Level 1 adds `Σz = 1` and the
//! pointwise maxima `z_I ≤ u_I`; it is a continuous knapsack solved greedily.
//! Level 2 adds the cut matrix: every lower-degree basis polynomial
//! `B_{I,K}`, rewritten in the degree-δ basis, is bounded by its maximum.
//! Its rows are generated lazily, adding violated ones until none remain.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bernstein::{
    basis_values, min_coefficient, to_bernstein, univariate_elevation, univariate_upper_bound,
    upper_bounds, vertex_condition, BernsteinForm, TensorShape, UpperBoundVector,
};
use crate::bnb::Constraints;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, LpStatus};
use crate::poly::{AffineMap, BoxDomain, Degree, MultiIndex, Polynomial};
use crate::scalar::Scalar;

/// Relaxation strength, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "first")]
    FirstLp,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Level {
    pub fn label(self) -> &'static str {
        match self {
            Level::Zero => "0",
            Level::FirstLp => "first",
            Level::One => "1",
            Level::Two => "2",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Level::Zero),
            "first" | "first_lp" | "first-lp" => Ok(Level::FirstLp),
            "1" => Ok(Level::One),
            "2" => Ok(Level::Two),
            other => Err(Error::InvalidConfig(format!("unknown level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationOutcome<S> {
    pub bound: S,
    /// Optimal placeholder vector; absent at level 0.
    pub z: Option<Vec<S>>,
    /// Cut-matrix row ids that entered the LP, in activation order.
    pub activated_rows: Vec<usize>,
    /// Minimiser in unit-box coordinates when the relaxation is exact.
    pub witness: Option<Vec<S>>,
    pub exact: bool,
    /// LP solves performed (row-generation rounds at level 2).
    pub iterations: usize,
}

impl<S: Scalar> RelaxationOutcome<S> {
    fn plain(bound: S, z: Option<Vec<S>>) -> Self {
        RelaxationOutcome {
            bound,
            z,
            activated_rows: Vec::new(),
            witness: None,
            exact: false,
            iterations: 0,
        }
    }

    /// Witness in the original coordinates.
    pub fn mapped_witness(&self, map: &AffineMap) -> Option<Vec<f64>> {
        self.witness
            .as_ref()
            .map(|w| map.apply(&w.iter().map(|v| v.to_f64()).collect::<Vec<_>>()))
    }

    fn with_exactness(mut self, delta: &Degree) -> Self {
        if let Some(z) = &self.z {
            if let Some(x) = exactness_point(z, delta) {
                self.witness = Some(x);
                self.exact = true;
            }
        }
        self
    }
}

/// Smallest Bernstein coefficient. Exact when the argmin is a box corner.
pub fn relax0<S: Scalar>(bf: &BernsteinForm<S>) -> RelaxationOutcome<S> {
    let (bound, arg) = min_coefficient(bf);
    let mut out = RelaxationOutcome::plain(bound, None);
    if vertex_condition(bf, &arg) {
        out.exact = true;
        out.witness = Some(
            arg.0
                .iter()
                .zip(&bf.degree().0)
                .map(|(&i, &d)| if d > 0 && i == d { S::one() } else { S::zero() })
                .collect(),
        );
    }
    out
}

/// Indices sorted by coefficient, ties by storage position.
fn ascending_order<S: Scalar>(b: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&x, &y| b[x].partial_cmp(&b[y]).unwrap_or(Ordering::Equal).then(x.cmp(&y)));
    order
}

/// Exact optimum of `min bᵀz, Σz = 1, 0 ≤ z ≤ u` by the fractional knapsack
/// greedy: fill the cheapest coordinates to capacity until the mass is spent.
/// When the mass runs out inside a group of equal coefficients, it is shared
/// in proportion to capacity, which keeps symmetric problems symmetric.
pub fn relax1<S: Scalar>(bf: &BernsteinForm<S>, u: &UpperBoundVector<S>) -> RelaxationOutcome<S> {
    let b = &bf.coeffs;
    let order = ascending_order(b);
    let mut z = vec![S::zero(); b.len()];
    let mut remaining = S::one();
    let mut bound = S::zero();
    let mut start = 0;
    while start < order.len() && remaining > S::zero() {
        let mut end = start + 1;
        while end < order.len() && b[order[end]] == b[order[start]] {
            end += 1;
        }
        let group = &order[start..end];
        let capacity = group.iter().fold(S::zero(), |acc, &p| acc + u.u[p].clone());
        if capacity <= remaining {
            for &p in group {
                z[p] = u.u[p].clone();
            }
            bound = bound + b[group[0]].clone() * capacity.clone();
            remaining = remaining - capacity;
        } else {
            for &p in group {
                z[p] = u.u[p].clone() * remaining.clone() / capacity.clone();
            }
            bound = bound + b[group[0]].clone() * remaining.clone();
            remaining = S::zero();
        }
        start = end;
    }
    assert!(
        remaining <= S::feas_tol(),
        "corner capacities are 1, so the mass is always placed"
    );
    RelaxationOutcome::plain(bound, Some(z)).with_exactness(bf.degree())
}

/// Closed-form dual bound for level 1: `max(b₁, b_{q+1} + Σ_{j≤q} b_j u_j)`
/// over coefficients sorted ascending. Never above the level-1 optimum.
pub fn first_lp_bound<S: Scalar>(bf: &BernsteinForm<S>, u: &UpperBoundVector<S>) -> S {
    let order = ascending_order(&bf.coeffs);
    let b: Vec<S> = order.iter().map(|&p| bf.coeffs[p].clone()).collect();
    let us: Vec<S> = order.iter().map(|&p| u.u[p].clone()).collect();
    let b1 = b[0].clone();
    if b1 >= S::zero() {
        return b1;
    }
    // 1-based l: last index with b_l ≤ 0.
    let l = b.iter().rposition(|v| *v <= S::zero()).map_or(b.len(), |p| p + 1);
    let mut q = 0;
    let mut mass = S::zero();
    for (i, ui) in us.iter().enumerate().take(l.saturating_sub(1)) {
        mass = mass + ui.clone();
        if mass > S::one() {
            break;
        }
        q = i + 1;
    }
    let mut candidate = b[q].clone();
    for j in 0..q {
        candidate = candidate + b[j].clone() * us[j].clone();
    }
    S::max_of(b1, candidate)
}

/// The level-1 LP: `min bᵀz, Σz = 1, 0 ≤ z ≤ u`.
pub fn level1_lp<S: Scalar>(bf: &BernsteinForm<S>, u: &UpperBoundVector<S>) -> LinearProgram<S> {
    let n = bf.len();
    let mut lp = LinearProgram::new(bf.coeffs.clone());
    lp.upper = u.u.iter().cloned().map(Some).collect();
    lp.add_eq(vec![S::one(); n], S::one());
    lp
}

/// One row of the cut matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutRow {
    pub i: MultiIndex,
    pub k: MultiIndex,
}

/// Rows `b̂^{(I,K)}·z ≤ B_{I,K}(I/K)` for `I ≤ K ≤ δ`, `K ≠ δ`, ordered by
/// `|K|`, then `K`, then `I`. Coefficients are kept in factored form: the
/// row is the outer product of univariate elevations, nonzero only on the
/// sub-box `I ≤ J ≤ I + δ − K`.
#[derive(Debug, Clone)]
pub struct CutMatrix<S> {
    shape: TensorShape,
    rows: Vec<CutRow>,
    /// `elev[j][k][i]` = univariate elevation of `β_{i,k}` to `δ_j`.
    elev: Vec<Vec<Vec<Vec<S>>>>,
    /// `ub[j][k][i]` = `β_{i,k}(i/k)`.
    ub: Vec<Vec<Vec<S>>>,
}

/// `Σ_{K≤δ} Π(k_j+1) − Π(δ_j+1)`.
pub fn cut_row_count(delta: &Degree) -> usize {
    let full: usize = delta.0.iter().map(|&d| d as usize + 1).product();
    let all: usize = delta
        .0
        .iter()
        .map(|&d| (d as usize + 1) * (d as usize + 2) / 2)
        .product();
    all - full
}

impl<S: Scalar> CutMatrix<S> {
    pub fn build(delta: &Degree) -> Self {
        let shape = TensorShape::new(delta.clone());
        let mut ks: Vec<MultiIndex> = shape.indices().filter(|k| k != delta).collect();
        ks.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| a.cmp(b)));
        let mut rows = Vec::with_capacity(cut_row_count(delta));
        for k in ks {
            for i in TensorShape::new(k.clone()).indices() {
                rows.push(CutRow { i, k: k.clone() });
            }
        }
        let elev = delta
            .0
            .iter()
            .map(|&d| {
                (0..=d)
                    .map(|k| (0..=k).map(|i| univariate_elevation(i, k, d)).collect())
                    .collect()
            })
            .collect();
        let ub = delta
            .0
            .iter()
            .map(|&d| {
                (0..=d)
                    .map(|k| (0..=k).map(|i| univariate_upper_bound(i, k)).collect())
                    .collect()
            })
            .collect();
        CutMatrix {
            shape,
            rows,
            elev,
            ub,
        }
    }

    pub fn degree(&self) -> &Degree {
        self.shape.degree()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, id: usize) -> &CutRow {
        &self.rows[id]
    }

    pub fn rhs(&self, id: usize) -> S {
        let r = &self.rows[id];
        let mut v = S::one();
        for j in 0..r.i.len() {
            v = v * self.ub[j][r.k.0[j] as usize][r.i.0[j] as usize].clone();
        }
        v
    }

    fn factors(&self, id: usize) -> Vec<&[S]> {
        let r = &self.rows[id];
        (0..r.i.len())
            .map(|j| self.elev[j][r.k.0[j] as usize][r.i.0[j] as usize].as_slice())
            .collect()
    }

    pub fn dense_row(&self, id: usize) -> Vec<S> {
        let factors: Vec<Vec<S>> = self.factors(id).into_iter().map(|f| f.to_vec()).collect();
        crate::bernstein::outer_product(&factors)
    }

    /// `row(id) · z`, touching only the row's support.
    pub fn dot(&self, id: usize, z: &[S]) -> S {
        let r = &self.rows[id];
        let factors = self.factors(id);
        let strides = self.shape.strides();
        let n = r.i.len();
        let lo: Vec<usize> = r.i.0.iter().map(|&v| v as usize).collect();
        let hi: Vec<usize> = (0..n)
            .map(|j| (r.i.0[j] + self.degree().0[j] - r.k.0[j]) as usize)
            .collect();
        let mut idx = lo.clone();
        let mut acc = S::zero();
        loop {
            let zp = &z[idx.iter().zip(strides).map(|(a, s)| a * s).sum::<usize>()];
            if !zp.is_zero() {
                let mut w = zp.clone();
                for j in 0..n {
                    w = w * factors[j][idx[j]].clone();
                }
                acc = acc + w;
            }
            // Odometer over the support box.
            let mut j = n;
            loop {
                if j == 0 {
                    return acc;
                }
                j -= 1;
                if idx[j] < hi[j] {
                    idx[j] += 1;
                    break;
                }
                idx[j] = lo[j];
            }
        }
    }
}

fn solve_checked<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::InfeasibleRelaxation),
        LpStatus::Unbounded => Err(Error::UnboundedRelaxation),
    }
}

/// Solves a level-1 style LP (possibly carrying extra rows) by simplex.
pub fn solve_relaxation_lp<S: Scalar>(lp: &LinearProgram<S>, delta: &Degree) -> Result<RelaxationOutcome<S>> {
    let sol = solve_checked(lp)?;
    let mut out = RelaxationOutcome::plain(sol.value, Some(sol.z)).with_exactness(delta);
    out.iterations = 1;
    Ok(out)
}

/// Row generation: solve, append every violated cut, repeat. The final
/// bound equals the optimum with all cuts present. `lp` is the starting
/// LP, normally [`level1_lp`] plus any constraint rows.
pub fn relax2_iterative_lp<S: Scalar>(
    mut lp: LinearProgram<S>,
    cuts: &CutMatrix<S>,
) -> Result<RelaxationOutcome<S>> {
    let tol = S::feas_tol();
    let mut active = vec![false; cuts.len()];
    let mut activated = Vec::new();
    let mut iterations = 0;
    loop {
        let sol = solve_checked(&lp)?;
        iterations += 1;
        let mut added = 0;
        for id in 0..cuts.len() {
            if active[id] {
                continue;
            }
            let rhs = cuts.rhs(id);
            if cuts.dot(id, &sol.z) - rhs.clone() > tol {
                active[id] = true;
                activated.push(id);
                lp.add_le(cuts.dense_row(id), rhs);
                added += 1;
            }
        }
        if added == 0 {
            let mut out =
                RelaxationOutcome::plain(sol.value, Some(sol.z)).with_exactness(cuts.degree());
            out.activated_rows = activated;
            out.iterations = iterations;
            return Ok(out);
        }
        log::debug!("row generation round {iterations}: {added} cuts added");
    }
}

pub fn relax2_iterative<S: Scalar>(
    bf: &BernsteinForm<S>,
    u: &UpperBoundVector<S>,
    cuts: &CutMatrix<S>,
) -> Result<RelaxationOutcome<S>> {
    relax2_iterative_lp(level1_lp(bf, u), cuts)
}

/// The full level-2 LP in one solve. Only practical for small δ.
pub fn relax2<S: Scalar>(
    bf: &BernsteinForm<S>,
    u: &UpperBoundVector<S>,
    cuts: &CutMatrix<S>,
) -> Result<RelaxationOutcome<S>> {
    let mut lp = level1_lp(bf, u);
    for id in 0..cuts.len() {
        lp.add_le(cuts.dense_row(id), cuts.rhs(id));
    }
    let mut out = solve_relaxation_lp(&lp, bf.degree())?;
    out.activated_rows = (0..cuts.len()).collect();
    Ok(out)
}

/// `x̃_j = Σ (i_j/δ_j) z_I`, accepted when `z_I = B_{I,δ}(x̃)` for every `I`.
/// Returns `x̃` in unit-box coordinates.
pub fn exactness_point<S: Scalar>(z: &[S], delta: &Degree) -> Option<Vec<S>> {
    let shape = TensorShape::new(delta.clone());
    if z.len() != shape.len() {
        return None;
    }
    let n = delta.len();
    let mut x = vec![S::zero(); n];
    for (p, zp) in z.iter().enumerate() {
        if zp.is_zero() {
            continue;
        }
        let idx = shape.multi(p);
        for j in 0..n {
            if delta.0[j] > 0 && idx.0[j] > 0 {
                x[j] = x[j].clone()
                    + zp.clone() * S::from_u128_ratio(idx.0[j] as u128, delta.0[j] as u128);
            }
        }
    }
    let x: Vec<S> = x
        .into_iter()
        .map(|v| S::min_of(S::max_of(v, S::zero()), S::one()))
        .collect();
    let tol = if S::EXACT { S::zero() } else { S::from_f64(1e-8) };
    let b = basis_values(delta, &x);
    if b.iter().zip(z).all(|(bv, zv)| (bv.clone() - zv.clone()).abs() <= tol) {
        Some(x)
    } else {
        None
    }
}

/// [`exactness_point`] mapped back to the original coordinates.
pub fn exactness_check<S: Scalar>(z: &[S], delta: &Degree, map: &AffineMap) -> Option<Vec<f64>> {
    exactness_point(z, delta).map(|x| map.apply(&x.iter().map(|v| v.to_f64()).collect::<Vec<_>>()))
}

/// Rewrites `A x ≤ b` for `x = offset + scale∘z` as `A' z ≤ b'`.
pub fn polyhedron_to_unit_box(a: &[Vec<f64>], b: &[f64], map: &AffineMap) -> (Vec<Vec<f64>>, Vec<f64>) {
    let a2 = a
        .iter()
        .map(|row| row.iter().zip(&map.scale).map(|(v, s)| v * s).collect())
        .collect();
    let b2 = a
        .iter()
        .zip(b)
        .map(|(row, bi)| bi - row.iter().zip(&map.offset).map(|(v, o)| v * o).sum::<f64>())
        .collect();
    (a2, b2)
}

/// Appends `Σ_I (A₀·I/δ) z_I ≤ b₀`, valid because `Σ (I/δ) B_{I,δ}(x) = x`.
/// `a0` and `b0` must already be in unit-box coordinates.
pub fn add_polyhedral_cuts<S: Scalar>(
    mut lp: LinearProgram<S>,
    a0: &[Vec<S>],
    b0: &[S],
    delta: &Degree,
) -> Result<LinearProgram<S>> {
    let shape = TensorShape::new(delta.clone());
    if lp.num_vars() != shape.len() {
        return Err(Error::DimensionMismatch {
            expected: shape.len(),
            got: lp.num_vars(),
        });
    }
    if a0.len() != b0.len() {
        return Err(Error::DimensionMismatch {
            expected: a0.len(),
            got: b0.len(),
        });
    }
    let ratios: Vec<Vec<S>> = shape
        .indices()
        .map(|idx| {
            idx.0
                .iter()
                .zip(&delta.0)
                .map(|(&i, &d)| if d == 0 { S::zero() } else { S::from_u128_ratio(i as u128, d as u128) })
                .collect()
        })
        .collect();
    for (row, rhs) in a0.iter().zip(b0) {
        if row.len() != delta.len() {
            return Err(Error::DimensionMismatch {
                expected: delta.len(),
                got: row.len(),
            });
        }
        let coeffs = ratios
            .iter()
            .map(|r| {
                r.iter()
                    .zip(row)
                    .fold(S::zero(), |acc, (x, a)| acc + x.clone() * a.clone())
            })
            .collect();
        lp.add_le(coeffs, rhs.clone());
    }
    Ok(lp)
}

/// Appends `b_δ(g)·z ≤ 0` for each `g ≤ 0` (unit-box coordinates).
pub fn add_semialgebraic_cuts<S: Scalar>(
    mut lp: LinearProgram<S>,
    g: &[Polynomial<S>],
    delta: &Degree,
) -> Result<LinearProgram<S>> {
    for gi in g {
        let row = to_bernstein(gi, delta)?.coeffs;
        if row.len() != lp.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: lp.num_vars(),
                got: row.len(),
            });
        }
        lp.add_le(row, S::zero());
    }
    Ok(lp)
}

/// Rows `−b_δ((z_i ∓ z_j)^{2d})·z ≤ 0` for every pair `i < j`.
pub fn dsos_cuts<S: Scalar>(delta: &Degree, d: u32) -> Result<Vec<(Vec<S>, S)>> {
    let n = delta.len();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if 2 * d > delta.0[i].min(delta.0[j]) {
                return Err(Error::UnsupportedDegree(format!(
                    "2d = {} exceeds min(δ_{}, δ_{}) = {}",
                    2 * d,
                    i + 1,
                    j + 1,
                    delta.0[i].min(delta.0[j])
                )));
            }
            let xi = Polynomial::<S>::variable(n, i);
            let xj = Polynomial::<S>::variable(n, j);
            for base in [xi.sub(&xj)?, xi.add(&xj)?] {
                let q = base.pow(2 * d);
                let row = to_bernstein(&q, delta)?.coeffs.into_iter().map(|v| -v).collect();
                rows.push((row, S::zero()));
            }
        }
    }
    Ok(rows)
}

/// Level-1 LP for `p` restricted to `domain`, carrying the side constraints
/// as extra rows. `bf` is the unit-box Bernstein form of `p` on `domain`.
pub fn constrained_level1_lp<S: Scalar>(
    bf: &BernsteinForm<S>,
    u: &UpperBoundVector<S>,
    constraints: &Constraints<S>,
    domain: &BoxDomain,
) -> Result<LinearProgram<S>> {
    let degree = bf.degree();
    let mut lp = level1_lp(bf, u);
    if !constraints.poly.is_empty() {
        let gq: Vec<Polynomial<S>> = constraints
            .poly
            .iter()
            .map(|g| g.to_unit_box(domain).map(|(gq, _)| gq))
            .collect::<Result<_>>()?;
        lp = add_semialgebraic_cuts(lp, &gq, degree)?;
    }
    if let Some((a, b)) = &constraints.linear {
        let (a2, b2) = polyhedron_to_unit_box(a, b, &domain.affine_map());
        let a2: Vec<Vec<S>> = a2.iter().map(|r| r.iter().map(|&v| S::from_f64(v)).collect()).collect();
        let b2: Vec<S> = b2.iter().map(|&v| S::from_f64(v)).collect();
        lp = add_polyhedral_cuts(lp, &a2, &b2, degree)?;
    }
    Ok(lp)
}

/// Every relaxation up to a given level for one box, as printed by `relax`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationChain<S> {
    pub degree: Degree,
    pub p0: RelaxationOutcome<S>,
    pub first: Option<S>,
    pub p1: Option<RelaxationOutcome<S>>,
    pub p2: Option<RelaxationOutcome<S>>,
    /// Size of the full cut matrix, when level 2 ran.
    pub cut_rows: Option<usize>,
}

impl<S: Scalar> RelaxationChain<S> {
    /// Strongest level that certified itself exact, with its witness in the
    /// original coordinates.
    pub fn witness(&self, domain: &BoxDomain) -> Option<(Level, Vec<f64>)> {
        let map = domain.affine_map();
        [(Level::Two, &self.p2), (Level::One, &self.p1)]
            .into_iter()
            .filter_map(|(l, o)| o.as_ref().map(|o| (l, o)))
            .chain(std::iter::once((Level::Zero, &self.p0)))
            .find_map(|(l, o)| o.mapped_witness(&map).map(|w| (l, w)))
    }
}

/// Runs levels 0 through `up_to` on `p` over `domain`. Side constraints only
/// enter levels 1 and 2, which then go through the simplex.
pub fn relaxation_chain<S: Scalar>(
    p: &Polynomial<S>,
    constraints: &Constraints<S>,
    domain: &BoxDomain,
    delta: &Degree,
    up_to: Level,
) -> Result<RelaxationChain<S>> {
    let (q, _) = p.to_unit_box(domain)?;
    let bf = to_bernstein(&q, delta)?;
    let u = upper_bounds::<S>(delta);
    let mut chain = RelaxationChain {
        degree: delta.clone(),
        p0: relax0(&bf),
        first: None,
        p1: None,
        p2: None,
        cut_rows: None,
    };
    if up_to >= Level::FirstLp {
        chain.first = Some(first_lp_bound(&bf, &u));
    }
    if up_to >= Level::One {
        chain.p1 = Some(if constraints.is_empty() {
            relax1(&bf, &u)
        } else {
            solve_relaxation_lp(&constrained_level1_lp(&bf, &u, constraints, domain)?, delta)?
        });
    }
    if up_to >= Level::Two {
        let cuts = CutMatrix::build(delta);
        chain.cut_rows = Some(cuts.len());
        chain.p2 = Some(relax2_iterative_lp(constrained_level1_lp(&bf, &u, constraints, domain)?, &cuts)?);
    }
    Ok(chain)
}
