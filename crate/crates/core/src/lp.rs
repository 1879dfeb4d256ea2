//! Dense bounded-variable primal simplex.
//!
//! Solves `min cᵀz  s.t.  A z ≤ rhs,  E z = d,  l ≤ z ≤ u` with a two-phase
//! tableau method. Variable bounds are handled implicitly: a nonbasic
//! variable sits at one of its bounds and may flip to the other without a
//! pivot. Works over any [`Scalar`]; with rationals every pivot is exact and
//! Bland's rule is used throughout.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("simplex iteration limit reached after {0} iterations")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `min cᵀz` subject to inequality rows, equality rows and variable bounds.
/// A `None` bound is infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    pub c: Vec<S>,
    pub a: Vec<Vec<S>>,
    pub rhs: Vec<S>,
    pub e: Vec<Vec<S>>,
    pub d: Vec<S>,
    pub lower: Vec<Option<S>>,
    pub upper: Vec<Option<S>>,
}

/// Row multipliers. `ineq[i] ≤ 0` pairs with `A_i z ≤ rhs_i`; `eq` is free.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals<S> {
    pub ineq: Vec<S>,
    pub eq: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub value: S,
    pub z: Vec<S>,
    pub duals: Option<Duals<S>>,
    pub iterations: usize,
}

impl<S: Scalar> LinearProgram<S> {
    /// `min cᵀz` over `0 ≤ z`, no rows yet.
    pub fn new(c: Vec<S>) -> Self {
        let n = c.len();
        LinearProgram {
            c,
            a: Vec::new(),
            rhs: Vec::new(),
            e: Vec::new(),
            d: Vec::new(),
            lower: vec![Some(S::zero()); n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_le(&mut self, row: Vec<S>, rhs: S) {
        self.a.push(row);
        self.rhs.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<S>, rhs: S) {
        self.e.push(row);
        self.d.push(rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.c.len();
        if self.a.len() != self.rhs.len() || self.e.len() != self.d.len() {
            return Err(LpError::Malformed("row and right-hand side counts differ".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("bound vectors have the wrong length".into()));
        }
        if let Some(k) = self.a.iter().chain(&self.e).position(|r| r.len() != n) {
            return Err(LpError::Malformed(format!("row {k} has the wrong width")));
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l > u {
                    return Err(LpError::Malformed(format!("variable {j} has lower > upper")));
                }
            }
        }
        Ok(())
    }

    /// Lagrangian lower bound for arbitrary multipliers. Positive entries of
    /// `duals.ineq` are clamped to zero, so the result is always a valid
    /// lower bound on the optimum (possibly `None`, meaning −∞).
    pub fn dual_bound(&self, duals: &Duals<S>) -> Option<S> {
        let y: Vec<S> = duals
            .ineq
            .iter()
            .map(|v| S::min_of(v.clone(), S::zero()))
            .collect();
        let mut value = S::zero();
        for (yi, bi) in y.iter().zip(&self.rhs) {
            value = value + yi.clone() * bi.clone();
        }
        for (yi, di) in duals.eq.iter().zip(&self.d) {
            value = value + yi.clone() * di.clone();
        }
        for j in 0..self.c.len() {
            let mut r = self.c[j].clone();
            for (yi, row) in y.iter().zip(&self.a) {
                r = r - yi.clone() * row[j].clone();
            }
            for (yi, row) in duals.eq.iter().zip(&self.e) {
                r = r - yi.clone() * row[j].clone();
            }
            let bound = if r > S::zero() {
                &self.lower[j]
            } else if r < S::zero() {
                &self.upper[j]
            } else {
                continue;
            };
            value = value + r * bound.clone()?;
        }
        Some(value)
    }

    pub fn solve(&self) -> Result<LpSolution<S>, LpError> {
        self.validate()?;
        Simplex::build(self).run(self)
    }
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone)]
enum VarMap<S> {
    /// `z = l + x`
    Shift(S),
    /// `z = u − x`
    Mirror(S),
    /// `z = x⁺ − x⁻`, the two columns given.
    Split(usize),
}

struct Simplex<S> {
    m: usize,
    ncols: usize,
    /// `m` rows of `B⁻¹A`.
    t: Vec<Vec<S>>,
    beta: Vec<S>,
    upper: Vec<Option<S>>,
    cost: Vec<S>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    artificial_start: usize,
    /// Column carrying `e_i` in the sign-normalised system, per row.
    unit_col: Vec<usize>,
    row_sign: Vec<S>,
    var_map: Vec<VarMap<S>>,
    n_struct: usize,
    iterations: usize,
    limit: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl<S: Scalar> Simplex<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.c.len();
        let mut var_map = Vec::with_capacity(n);
        let mut struct_cost: Vec<S> = Vec::new();
        let mut struct_upper: Vec<Option<S>> = Vec::new();
        // For each original variable: columns it occupies and their signs.
        let mut cols_of: Vec<Vec<(usize, S)>> = Vec::with_capacity(n);
        for j in 0..n {
            match (&lp.lower[j], &lp.upper[j]) {
                (Some(l), u) => {
                    let col = struct_cost.len();
                    struct_cost.push(lp.c[j].clone());
                    struct_upper.push(u.as_ref().map(|u| u.clone() - l.clone()));
                    var_map.push(VarMap::Shift(l.clone()));
                    cols_of.push(vec![(col, S::one())]);
                }
                (None, Some(u)) => {
                    let col = struct_cost.len();
                    struct_cost.push(-lp.c[j].clone());
                    struct_upper.push(None);
                    var_map.push(VarMap::Mirror(u.clone()));
                    cols_of.push(vec![(col, -S::one())]);
                }
                (None, None) => {
                    let col = struct_cost.len();
                    struct_cost.push(lp.c[j].clone());
                    struct_cost.push(-lp.c[j].clone());
                    struct_upper.push(None);
                    struct_upper.push(None);
                    var_map.push(VarMap::Split(col));
                    cols_of.push(vec![(col, S::one()), (col + 1, -S::one())]);
                }
            }
        }
        let n_struct = struct_cost.len();

        // Constant offset each row picks up from shifted/mirrored variables.
        let offset = |row: &[S]| -> S {
            let mut acc = S::zero();
            for (j, vm) in var_map.iter().enumerate() {
                match vm {
                    VarMap::Shift(l) => acc = acc + row[j].clone() * l.clone(),
                    VarMap::Mirror(u) => acc = acc + row[j].clone() * u.clone(),
                    VarMap::Split(_) => {}
                }
            }
            acc
        };

        let m_ineq = lp.a.len();
        let m = m_ineq + lp.e.len();
        let mut rows: Vec<Vec<S>> = Vec::with_capacity(m);
        let mut rhs: Vec<S> = Vec::with_capacity(m);
        for (row, b) in lp.a.iter().chain(&lp.e).zip(lp.rhs.iter().chain(&lp.d)) {
            let mut dense = vec![S::zero(); n_struct];
            for (j, cols) in cols_of.iter().enumerate() {
                if row[j].is_zero() {
                    continue;
                }
                for (col, sign) in cols {
                    dense[*col] = row[j].clone() * sign.clone();
                }
            }
            rows.push(dense);
            rhs.push(b.clone() - offset(row));
        }

        // Slacks for inequality rows, then artificials where needed.
        let slack_start = n_struct;
        let artificial_start = slack_start + m_ineq;
        let mut row_sign = Vec::with_capacity(m);
        let mut needs_artificial = Vec::with_capacity(m);
        for i in 0..m {
            let negative = rhs[i] < S::zero();
            row_sign.push(if negative { -S::one() } else { S::one() });
            needs_artificial.push(i >= m_ineq || negative);
        }
        let n_art = needs_artificial.iter().filter(|&&b| b).count();
        let ncols = artificial_start + n_art;

        let mut t = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_col = Vec::with_capacity(m);
        let mut next_art = artificial_start;
        for i in 0..m {
            let sign = row_sign[i].clone();
            let mut full: Vec<S> = rows[i].iter().map(|v| v.clone() * sign.clone()).collect();
            full.resize(ncols, S::zero());
            if i < m_ineq {
                full[slack_start + i] = sign.clone();
            }
            if needs_artificial[i] {
                full[next_art] = S::one();
                basis.push(next_art);
                unit_col.push(next_art);
                next_art += 1;
            } else {
                basis.push(slack_start + i);
                unit_col.push(slack_start + i);
            }
            t.push(full);
            beta.push(rhs[i].clone() * sign);
        }

        let mut upper = struct_upper;
        upper.resize(ncols, None);
        let mut cost = struct_cost;
        cost.resize(ncols, S::zero());

        Simplex {
            m,
            ncols,
            t,
            beta,
            upper,
            cost,
            basis,
            at_upper: vec![false; ncols],
            artificial_start,
            unit_col,
            row_sign,
            var_map,
            n_struct,
            iterations: 0,
            limit: 50 * (m + n).max(1),
        }
    }

    fn reduced_costs(&self, cost: &[S]) -> Vec<S> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (dj, tij) in d.iter_mut().zip(&self.t[i]) {
                if !tij.is_zero() {
                    *dj = dj.clone() - cb.clone() * tij.clone();
                }
            }
        }
        d
    }

    fn nonbasic_value(&self, j: usize) -> S {
        if self.at_upper[j] {
            self.upper[j].clone().expect("at upper implies finite bound")
        } else {
            S::zero()
        }
    }

    fn objective(&self, cost: &[S]) -> S {
        let mut is_basic = vec![false; self.ncols];
        let mut v = S::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            is_basic[b] = true;
            v = v + cost[b].clone() * self.beta[i].clone();
        }
        for j in 0..self.ncols {
            if !is_basic[j] && self.at_upper[j] {
                v = v + cost[j].clone() * self.nonbasic_value(j);
            }
        }
        v
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [S]) {
        let p = self.t[r][j].clone();
        for v in self.t[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / p.clone();
            }
        }
        let pivot_row = self.t[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][j].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pr) in self.t[i].iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v = v.clone() - f.clone() * pr.clone();
                }
            }
        }
        let f = d[j].clone();
        if !f.is_zero() {
            for (v, pr) in d.iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v = v.clone() - f.clone() * pr.clone();
                }
            }
        }
        self.basis[r] = j;
    }

    /// One iteration. `allowed` bounds the column range that may enter.
    fn step(&mut self, d: &mut [S], allowed: usize, bland: bool) -> Step {
        let tol = S::feas_tol();
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        let mut entering: Option<(usize, S)> = None;
        for j in 0..allowed {
            if is_basic[j] {
                continue;
            }
            let score = if self.at_upper[j] {
                d[j].clone()
            } else {
                -d[j].clone()
            };
            if score <= tol {
                continue;
            }
            // A fixed variable cannot move.
            if self.upper[j].as_ref().is_some_and(|u| u.is_zero()) {
                continue;
            }
            match &entering {
                None => entering = Some((j, score)),
                Some((_, best)) if !bland && score > *best => entering = Some((j, score)),
                _ => {}
            }
            if bland {
                break;
            }
        }
        let Some((j, _)) = entering else {
            return Step::Optimal;
        };
        let dir = if self.at_upper[j] { -S::one() } else { S::one() };

        // Ratio test; ties go to the smallest basic variable index.
        let mut best: Option<(S, Option<usize>)> = self.upper[j].clone().map(|u| (u, None));
        let pivot_tol = if S::EXACT { S::zero() } else { S::from_f64(1e-9) };
        for i in 0..self.m {
            let alpha = dir.clone() * self.t[i][j].clone();
            let limit = if alpha > pivot_tol {
                S::max_of(self.beta[i].clone(), S::zero()) / alpha
            } else if alpha < -pivot_tol.clone() {
                match &self.upper[self.basis[i]] {
                    Some(u) => S::max_of(u.clone() - self.beta[i].clone(), S::zero()) / (-alpha),
                    None => continue,
                }
            } else {
                continue;
            };
            let better = match &best {
                None => true,
                Some((t, row)) => {
                    limit < *t
                        || (limit == *t
                            && match row {
                                Some(r) => self.basis[i] < self.basis[*r],
                                None => false,
                            })
                }
            };
            if better {
                best = Some((limit, Some(i)));
            }
        }
        let Some((step, row)) = best else {
            return Step::Unbounded;
        };

        let delta = dir.clone() * step.clone();
        for i in 0..self.m {
            let tij = self.t[i][j].clone();
            if !tij.is_zero() {
                self.beta[i] = self.beta[i].clone() - delta.clone() * tij;
            }
        }
        match row {
            None => {
                self.at_upper[j] = !self.at_upper[j];
            }
            Some(r) => {
                let leaving = self.basis[r];
                let alpha = dir * self.t[r][j].clone();
                self.at_upper[leaving] = alpha < S::zero();
                let entering_value = self.nonbasic_value(j) + delta;
                self.at_upper[j] = false;
                self.pivot(r, j, d);
                self.beta[r] = entering_value;
            }
        }
        Step::Moved
    }

    fn optimise(&mut self, cost: &[S], allowed: usize) -> Result<Step, LpError> {
        let mut d = self.reduced_costs(cost);
        let mut bland = S::EXACT;
        let mut last = self.objective(cost);
        let mut stalled = 0usize;
        loop {
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit(self.iterations));
            }
            self.iterations += 1;
            match self.step(&mut d, allowed, bland) {
                Step::Moved => {}
                other => return Ok(other),
            }
            if !bland {
                let now = self.objective(cost);
                if now < last {
                    stalled = 0;
                    last = now;
                } else {
                    stalled += 1;
                    if stalled > 20 {
                        bland = true;
                    }
                }
            }
        }
    }

    fn run(mut self, lp: &LinearProgram<S>) -> Result<LpSolution<S>, LpError> {
        let n = lp.c.len();
        if self.ncols > self.artificial_start {
            let mut phase1 = vec![S::zero(); self.ncols];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = S::one();
            }
            self.optimise(&phase1, self.ncols)?;
            let infeas = self.objective(&phase1);
            let tol = if S::EXACT { S::zero() } else { S::from_f64(1e-7) };
            if infeas > tol {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    value: S::zero(),
                    z: vec![S::zero(); n],
                    duals: None,
                    iterations: self.iterations,
                });
            }
            // Artificials stay at zero from here on.
            for j in self.artificial_start..self.ncols {
                self.upper[j] = Some(S::zero());
                self.at_upper[j] = false;
            }
        }
        let cost = self.cost.clone();
        if let Step::Unbounded = self.optimise(&cost, self.artificial_start)? {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                value: S::zero(),
                z: vec![S::zero(); n],
                duals: None,
                iterations: self.iterations,
            });
        }

        let mut x = vec![S::zero(); self.ncols];
        for j in 0..self.ncols {
            x[j] = self.nonbasic_value(j);
        }
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.beta[i].clone();
        }
        let z: Vec<S> = self
            .var_map
            .iter()
            .enumerate()
            .map(|(j, vm)| match vm {
                VarMap::Shift(l) => l.clone() + x[self.col_of(j)].clone(),
                VarMap::Mirror(u) => u.clone() - x[self.col_of(j)].clone(),
                VarMap::Split(col) => x[*col].clone() - x[col + 1].clone(),
            })
            .collect();
        let mut value = S::zero();
        for (cj, zj) in lp.c.iter().zip(&z) {
            value = value + cj.clone() * zj.clone();
        }

        let d = self.reduced_costs(&cost);
        let y: Vec<S> = (0..self.m)
            .map(|i| {
                let col = self.unit_col[i];
                (cost[col].clone() - d[col].clone()) * self.row_sign[i].clone()
            })
            .collect();
        let m_ineq = lp.a.len();
        let duals = Duals {
            ineq: y[..m_ineq].to_vec(),
            eq: y[m_ineq..].to_vec(),
        };
        debug_assert!(self.n_struct <= self.artificial_start);
        Ok(LpSolution {
            status: LpStatus::Optimal,
            value,
            z,
            duals: Some(duals),
            iterations: self.iterations,
        })
    }

    /// Tableau column of a shifted or mirrored original variable.
    fn col_of(&self, j: usize) -> usize {
        let mut col = 0;
        for vm in &self.var_map[..j] {
            col += match vm {
                VarMap::Split(_) => 2,
                _ => 1,
            };
        }
        col
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn single_bounded_variable() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.upper[0] = Some(1.0);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn classic_two_variable() {
        // max 3x + 5y st x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → 36 at (2,6)
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.add_le(vec![1.0, 0.0], 4.0);
        lp.add_le(vec![0.0, 2.0], 12.0);
        lp.add_le(vec![3.0, 2.0], 18.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value + 36.0).abs() < 1e-12);
        assert!((sol.z[0] - 2.0).abs() < 1e-12 && (sol.z[1] - 6.0).abs() < 1e-12);
        let db = lp.dual_bound(sol.duals.as_ref().unwrap()).unwrap();
        assert!((db + 36.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x + y st x + y = 2, -x ≤ -0.5, 0 ≤ x,y ≤ 1.5
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.upper = vec![Some(1.5), Some(1.5)];
        lp.add_eq(vec![1.0, 1.0], 2.0);
        lp.add_le(vec![-1.0, 0.0], -0.5);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 2.5).abs() < 1e-12, "{}", sol.value);
        let db = lp.dual_bound(sol.duals.as_ref().unwrap()).unwrap();
        assert!((db - 2.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.upper[0] = Some(1.0);
        lp.add_eq(vec![1.0], 2.0);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);

        let lp = LinearProgram::new(vec![-1.0]);
        assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min x - y st x ≥ -3 (free x given via row), y ≤ 2 with no lower.
        let mut lp = LinearProgram::new(vec![1.0, -1.0]);
        lp.lower = vec![None, None];
        lp.upper = vec![None, Some(2.0)];
        lp.add_le(vec![-1.0, 0.0], 3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value + 5.0).abs() < 1e-12);
        assert!((sol.z[0] + 3.0).abs() < 1e-12 && (sol.z[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rational_mode_is_exact() {
        let q = |s: &str| Rational::parse_str(s).unwrap();
        let mut lp = LinearProgram::new(vec![q("-1"), q("-1")]);
        lp.add_le(vec![q("3"), q("1")], q("1"));
        lp.add_le(vec![q("1"), q("3")], q("1"));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.value, q("-1/2"));
        assert_eq!(sol.z, vec![q("1/4"), q("1/4")]);
        assert_eq!(lp.dual_bound(sol.duals.as_ref().unwrap()), Some(q("-1/2")));
    }

    #[test]
    fn malformed_rejected() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_le(vec![1.0], 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Malformed(_))));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Chvátal's cycling example for textbook Dantzig pricing.
        let mut lp = LinearProgram::new(vec![-10.0, 57.0, 9.0, 24.0]);
        lp.add_le(vec![0.5, -5.5, -2.5, 9.0], 0.0);
        lp.add_le(vec![0.5, -1.5, -0.5, 1.0], 0.0);
        lp.add_le(vec![1.0, 0.0, 0.0, 0.0], 1.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value + 1.0).abs() < 1e-9, "{}", sol.value);
    }
}
