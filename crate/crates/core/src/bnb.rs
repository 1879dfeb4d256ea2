//! Best-first branch-and-bound over boxes.
//!
//! Each popped box is mapped to the unit box and bounded with the chosen
//! relaxation. A box leaves the worklist when its bound cannot beat the
//! incumbent, when the bound is attained (vertex condition or a recovered
//! exact minimiser), or when some variables are monotone, in which case the
//! lower-dimensional edge problem is solved recursively instead. Otherwise it
//! is bisected.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bernstein::{min_coefficient, to_bernstein, upper_bounds, BernsteinForm};
use crate::error::{Error, Result};
use crate::poly::{BoxDomain, Degree, Polynomial, Side};
use crate::relax::{
    constrained_level1_lp, first_lp_bound, level1_lp,
    relax0, relax1, relax2_iterative_lp, solve_relaxation_lp, CutMatrix, Level, RelaxationOutcome,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    LongestEdge,
    ZeroCentered,
}

impl std::str::FromStr for SplitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "longest" | "longest_edge" => Ok(SplitStrategy::LongestEdge),
            "zero" | "zero_centered" => Ok(SplitStrategy::ZeroCentered),
            other => Err(Error::InvalidConfig(format!("unknown split strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbConfig {
    pub level: Level,
    /// Relative cutoff tolerance.
    pub epsilon: f64,
    /// Budget on popped boxes, edge problems included.
    pub max_boxes: usize,
    pub min_box_width: f64,
    pub split: SplitStrategy,
    /// Bernstein degree per node; defaults to the objective's own degree.
    pub degree: Option<Degree>,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            level: Level::Zero,
            epsilon: 1e-9,
            max_boxes: 1_000_000,
            min_box_width: 1e-12,
            split: SplitStrategy::LongestEdge,
            degree: None,
        }
    }
}

impl BnbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.max_boxes == 0 {
            return Err(Error::InvalidConfig("max_boxes must be at least 1".into()));
        }
        if !(self.min_box_width >= 0.0) {
            return Err(Error::InvalidConfig("min_box_width must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Counters named after the usual reporting columns: `Sub`, `Cutoff`,
/// `Mono`, and their edge-problem counterparts `Sub*`, `Cutoff*`, `Time*`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BnbStats {
    pub subdivisions: usize,
    pub cutoff_count: usize,
    pub mono_count: usize,
    pub edge_subdivisions: usize,
    pub edge_cutoffs: usize,
    pub exact_leaves: usize,
    pub elapsed: f64,
    pub edge_elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbResult {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub witness: Vec<f64>,
    pub stats: BnbStats,
    pub converged: bool,
}

/// Optional side constraints. Polynomials mean `g(x) ≤ 0`; the linear
/// block means `A x ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints<S> {
    pub poly: Vec<Polynomial<S>>,
    pub linear: Option<(Vec<Vec<f64>>, Vec<f64>)>,
}

impl<S: Scalar> Default for Constraints<S> {
    fn default() -> Self {
        Constraints {
            poly: Vec::new(),
            linear: None,
        }
    }
}

impl<S: Scalar> Constraints<S> {
    pub fn is_empty(&self) -> bool {
        self.poly.is_empty() && self.linear.as_ref().is_none_or(|(a, _)| a.is_empty())
    }

    /// True when some constraint is violated everywhere on the box, judged
    /// by its smallest Bernstein coefficient (polynomial rows) or its
    /// minimum over the box (linear rows).
    pub fn excludes(&self, domain: &BoxDomain) -> Result<bool> {
        for g in &self.poly {
            let (q, _) = g.to_unit_box(domain)?;
            let bf = to_bernstein(&q, &q.support_degree())?;
            if min_coefficient(&bf).0 > S::zero() {
                return Ok(true);
            }
        }
        if let Some((a, b)) = &self.linear {
            for (row, bi) in a.iter().zip(b) {
                let lo: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(j, c)| if *c >= 0.0 { c * domain.lower()[j] } else { c * domain.upper()[j] })
                    .sum();
                if lo > *bi {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Feasibility of a point, with slack `tol`.
    pub fn admits(&self, x: &[f64], tol: f64) -> bool {
        let poly_ok = self.poly.iter().all(|g| {
            g.eval_f64(x)
                .map(|v| v.to_f64() <= tol)
                .unwrap_or(false)
        });
        let lin_ok = self.linear.as_ref().is_none_or(|(a, b)| {
            a.iter()
                .zip(b)
                .all(|(row, bi)| row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= bi + tol)
        });
        poly_ok && lin_ok
    }
}

/// Sign of `∂p/∂x_r` over a box, read off its Bernstein coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Mixed,
}

pub fn monotonicity_test<S: Scalar>(p: &Polynomial<S>, domain: &BoxDomain) -> Result<Vec<Monotonicity>> {
    let mut out = Vec::with_capacity(p.dim());
    for r in 0..p.dim() {
        let d = p.partial_derivative(r)?;
        let (q, _) = d.to_unit_box(domain)?;
        let bf = to_bernstein(&q, &q.support_degree().join(q.degree()))?;
        let sign = if bf.coeffs.iter().all(|c| *c > S::zero()) {
            Monotonicity::Increasing
        } else if bf.coeffs.iter().all(|c| *c < S::zero()) {
            Monotonicity::Decreasing
        } else {
            Monotonicity::Mixed
        };
        out.push(sign);
    }
    Ok(out)
}

/// Bisects the widest edge (lowest axis on ties). With `ZeroCentered` the cut
/// goes through 0 when 0 is strictly inside that edge.
pub fn split_box(domain: &BoxDomain, strategy: SplitStrategy, min_width: f64) -> Result<(BoxDomain, BoxDomain)> {
    let mut axis = 0;
    for j in 1..domain.dim() {
        if domain.width(j) > domain.width(axis) {
            axis = j;
        }
    }
    let width = domain.width(axis);
    if domain.dim() == 0 || width <= min_width {
        return Err(Error::BoxTooSmall(if domain.dim() == 0 { 0.0 } else { width }));
    }
    let (lo, hi) = (domain.lower()[axis], domain.upper()[axis]);
    let mid = 0.5 * (lo + hi);
    let at = match strategy {
        SplitStrategy::ZeroCentered if lo < 0.0 && 0.0 < hi => 0.0,
        _ => mid,
    };
    if !(lo < at && at < hi) {
        return Err(Error::BoxTooSmall(width));
    }
    Ok(domain.split_at(axis, at))
}

/// Prune when the box cannot improve the incumbent by more than the
/// relative tolerance: `pB ≥ p̂ − ε·max(1, |p̂|)`.
pub fn cutoff_test(p_b: f64, p_hat: f64, epsilon: f64) -> bool {
    p_hat.is_finite() && p_b >= p_hat - epsilon * p_hat.abs().max(1.0)
}

/// Smaller of `p` at the box centre and at the grid point of the smallest
/// Bernstein coefficient, among feasible points. `+∞` when neither is.
pub fn sample_upper_bound<S: Scalar>(
    p: &Polynomial<S>,
    domain: &BoxDomain,
    bf: &BernsteinForm<S>,
    constraints: &Constraints<S>,
) -> (f64, Vec<f64>) {
    let (_, arg) = min_coefficient(bf);
    let grid = domain.affine_map().apply(&arg.ratio(bf.degree()));
    let mut best = (f64::INFINITY, Vec::new());
    for x in [domain.center(), grid] {
        if !constraints.admits(&x, 0.0) {
            continue;
        }
        if let Ok(v) = p.eval_f64(&x) {
            let v = v.to_f64();
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    best
}

/// Fixes every monotone axis at its minimising bound. Returns the reduced
/// polynomial, its box, and `(axis, value)` for each fixed axis.
pub fn edge_subproblem<S: Scalar>(
    p: &Polynomial<S>,
    domain: &BoxDomain,
    signs: &[Monotonicity],
) -> Result<(Polynomial<S>, BoxDomain, Vec<(usize, f64)>)> {
    let mut q = p.clone();
    let mut dom = domain.clone();
    let mut fixed = Vec::new();
    // Highest axis first so that lower axis numbers stay valid.
    for r in (0..signs.len()).rev() {
        let side = match signs[r] {
            Monotonicity::Increasing => Side::Lower,
            Monotonicity::Decreasing => Side::Upper,
            Monotonicity::Mixed => continue,
        };
        let value = match side {
            Side::Lower => dom.lower()[r],
            Side::Upper => dom.upper()[r],
        };
        q = q.restrict_facet(r, side, &dom)?;
        dom = dom.without_axis(r);
        fixed.push((r, value));
    }
    fixed.reverse();
    Ok((q, dom, fixed))
}

struct Node {
    key: f64,
    seq: u64,
    domain: BoxDomain,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.seq.cmp(&other.seq))
    }
}

struct Outcome {
    lower: f64,
    exhausted: bool,
}

struct Solver<'a, S: Scalar> {
    cfg: &'a BnbConfig,
    constraints: &'a Constraints<S>,
    stats: BnbStats,
    incumbent: (f64, Vec<f64>),
    cuts: HashMap<Degree, CutMatrix<S>>,
    pops: usize,
    seq: u64,
}

/// Bound for one box at the configured level.
struct BoxBound {
    value: f64,
    /// The bound is attained at this point (original coordinates).
    attained_at: Option<Vec<f64>>,
    infeasible: bool,
}

impl<'a, S: Scalar> Solver<'a, S> {
    fn lift(template: &[Option<f64>], free: &[f64]) -> Vec<f64> {
        let mut it = free.iter();
        template
            .iter()
            .map(|t| t.unwrap_or_else(|| *it.next().expect("one value per free axis")))
            .collect()
    }

    fn offer(&mut self, value: f64, point: Vec<f64>) {
        if value < self.incumbent.0 {
            self.incumbent = (value, point);
        }
    }

    fn bound_box(&mut self, domain: &BoxDomain, degree: &Degree, bf: &BernsteinForm<S>, top: bool) -> Result<BoxBound> {
        let map = domain.affine_map();
        let r0 = relax0(bf);
        let p0 = r0.bound.to_f64();
        // Constraint rows only make sense at full dimension.
        let constrained = top && !self.constraints.is_empty();
        if r0.exact && (!constrained || self.constraints.admits(&r0.mapped_witness(&map).unwrap(), 1e-12)) {
            return Ok(BoxBound {
                value: p0,
                attained_at: r0.mapped_witness(&map),
                infeasible: false,
            });
        }
        let u = || upper_bounds::<S>(degree);
        let outcome = match self.cfg.level {
            Level::Zero => Some(r0),
            Level::FirstLp => Some(RelaxationOutcome {
                bound: S::max_of(first_lp_bound(bf, &u()), r0.bound),
                z: None,
                activated_rows: Vec::new(),
                witness: None,
                exact: false,
                iterations: 0,
            }),
            Level::One | Level::Two => {
                let res = if !constrained && self.cfg.level == Level::One {
                    Ok(relax1(bf, &u()))
                } else {
                    let lp = if constrained {
                        constrained_level1_lp(bf, &u(), self.constraints, domain)?
                    } else {
                        level1_lp(bf, &u())
                    };
                    if self.cfg.level == Level::Two {
                        let cuts = self
                            .cuts
                            .entry(degree.clone())
                            .or_insert_with(|| CutMatrix::build(degree));
                        relax2_iterative_lp(lp, cuts)
                    } else {
                        solve_relaxation_lp(&lp, degree)
                    }
                };
                match res {
                    Ok(o) => Some(o),
                    Err(Error::InfeasibleRelaxation) => {
                        return Ok(BoxBound {
                            value: f64::INFINITY,
                            attained_at: None,
                            infeasible: true,
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        let outcome = outcome.expect("every level yields an outcome");
        let value = outcome.bound.to_f64().max(p0);
        let attained_at = outcome
            .mapped_witness(&map)
            .filter(|w| !constrained || self.constraints.admits(w, 1e-9));
        Ok(BoxBound {
            value,
            attained_at,
            infeasible: false,
        })
    }

    /// Branch-and-bound on `p` over `domain`. `template` maps the free
    /// variables of this (sub)problem back to the original space.
    fn run(&mut self, p: &Polynomial<S>, domain: &BoxDomain, template: &[Option<f64>], edge: bool) -> Result<Outcome> {
        let top = !edge;
        if p.dim() == 0 {
            let v = p.eval(&[])?.to_f64();
            self.offer(v, Self::lift(template, &[]));
            return Ok(Outcome {
                lower: v,
                exhausted: true,
            });
        }
        let degree = match (&self.cfg.degree, top) {
            (Some(d), true) => d.clone(),
            _ => {
                let mut d = p.support_degree().join(p.degree());
                if top {
                    for g in &self.constraints.poly {
                        d = d.join(&g.support_degree());
                    }
                }
                d
            }
        };
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Node {
            key: f64::NEG_INFINITY,
            seq: self.next_seq(),
            domain: domain.clone(),
        }));
        let mut leaf_min = f64::INFINITY;
        let mut stalled = false;

        while let Some(Reverse(node)) = heap.pop() {
            if self.pops >= self.cfg.max_boxes {
                heap.push(Reverse(node));
                break;
            }
            self.pops += 1;
            if edge {
                self.stats.edge_subdivisions += 1;
            } else {
                self.stats.subdivisions += 1;
            }
            let dom = node.domain;
            // A stale key may already be prunable.
            if cutoff_test(node.key, self.incumbent.0, self.cfg.epsilon) {
                self.count_cutoff(edge);
                leaf_min = leaf_min.min(node.key);
                continue;
            }
            if top && self.constraints.excludes(&dom)? {
                self.count_cutoff(edge);
                continue;
            }
            let (q, _) = p.to_unit_box(&dom)?;
            let bf = to_bernstein(&q, &degree)?;
            let no_constraints = Constraints::default();
            let (v, x) = sample_upper_bound(p, &dom, &bf, if top { self.constraints } else { &no_constraints });
            if v.is_finite() {
                self.offer(v, Self::lift(template, &x));
            }
            let bb = self.bound_box(&dom, &degree, &bf, top)?;
            if bb.infeasible {
                self.count_cutoff(edge);
                continue;
            }
            if let Some(x) = &bb.attained_at {
                self.offer(bb.value, Self::lift(template, x));
                self.stats.exact_leaves += 1;
                leaf_min = leaf_min.min(bb.value);
                continue;
            }
            if cutoff_test(bb.value, self.incumbent.0, self.cfg.epsilon) {
                self.count_cutoff(edge);
                leaf_min = leaf_min.min(bb.value);
                continue;
            }
            if self.constraints.is_empty() {
                let signs = monotonicity_test(p, &dom)?;
                if signs.iter().any(|s| *s != Monotonicity::Mixed) {
                    self.stats.mono_count += 1;
                    let (sub, sub_dom, fixed) = edge_subproblem(p, &dom, &signs)?;
                    let sub_template = Self::fix_template(template, &fixed);
                    let started = Instant::now();
                    let out = self.run(&sub, &sub_dom, &sub_template, true)?;
                    if !edge {
                        self.stats.edge_elapsed += started.elapsed().as_secs_f64();
                    }
                    // The edge minimum is the box minimum.
                    leaf_min = leaf_min.min(out.lower.max(bb.value));
                    stalled |= !out.exhausted;
                    continue;
                }
            }
            match split_box(&dom, self.cfg.split, self.cfg.min_box_width) {
                Ok((a, b)) => {
                    for child in [a, b] {
                        let seq = self.next_seq();
                        heap.push(Reverse(Node {
                            key: bb.value,
                            seq,
                            domain: child,
                        }));
                    }
                }
                Err(Error::BoxTooSmall(_)) => {
                    stalled = true;
                    leaf_min = leaf_min.min(bb.value);
                }
                Err(e) => return Err(e),
            }
        }
        let open_min = heap.iter().map(|Reverse(n)| n.key).fold(f64::INFINITY, f64::min);
        Ok(Outcome {
            lower: leaf_min.min(open_min),
            exhausted: heap.is_empty() && !stalled,
        })
    }

    fn count_cutoff(&mut self, edge: bool) {
        if edge {
            self.stats.edge_cutoffs += 1;
        } else {
            self.stats.cutoff_count += 1;
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    /// Fixes axes of the current subproblem (numbered among its free axes).
    fn fix_template(template: &[Option<f64>], fixed: &[(usize, f64)]) -> Vec<Option<f64>> {
        let mut out = template.to_vec();
        let free_positions: Vec<usize> = (0..template.len()).filter(|&k| template[k].is_none()).collect();
        for &(axis, value) in fixed {
            out[free_positions[axis]] = Some(value);
        }
        out
    }
}

/// Minimises `p` over `domain ∩ {constraints}`.
pub fn branch_and_bound<S: Scalar>(
    p: &Polynomial<S>,
    constraints: &Constraints<S>,
    domain: &BoxDomain,
    cfg: &BnbConfig,
) -> Result<BnbResult> {
    cfg.validate()?;
    if p.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: domain.dim(),
        });
    }
    for g in &constraints.poly {
        if g.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: g.dim(),
            });
        }
    }
    if let Some(d) = &cfg.degree {
        let mut need = p.support_degree();
        for g in &constraints.poly {
            need = need.join(&g.support_degree());
        }
        if d.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: d.len(),
            });
        }
        if !need.le(d) {
            return Err(Error::DegreeTooSmall {
                requested: d.0.clone(),
                required: need.0,
            });
        }
    }
    let started = Instant::now();
    let mut solver = Solver {
        cfg,
        constraints,
        stats: BnbStats::default(),
        incumbent: (f64::INFINITY, Vec::new()),
        cuts: HashMap::new(),
        pops: 0,
        seq: 0,
    };
    let template = vec![None; p.dim()];
    let out = solver.run(p, domain, &template, false)?;
    let mut stats = solver.stats;
    stats.elapsed = started.elapsed().as_secs_f64();
    let (upper, witness) = solver.incumbent;
    let lower = out.lower.min(upper);
    let converged = out.exhausted && upper.is_finite() && upper - lower <= cfg.epsilon * upper.abs().max(1.0) * (1.0 + 1e-9);
    if !out.exhausted {
        log::warn!(
            "branch-and-bound stopped after {} boxes without exhausting the worklist",
            solver.pops
        );
    }
    Ok(BnbResult {
        lower_bound: lower,
        upper_bound: upper,
        witness,
        stats,
        converged,
    })
}
