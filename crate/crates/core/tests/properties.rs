mod common;

use bernpop::bernstein::{
    basis_values, bernstein_eval, elevation_row, min_coefficient, to_bernstein, upper_bounds, TensorShape,
};
use bernpop::bnb::{branch_and_bound, split_box, BnbConfig, Constraints, SplitStrategy};
use bernpop::lp::{LinearProgram, LpStatus};
use bernpop::relax::{
    exactness_point, first_lp_bound, level1_lp, relax0, relax1, relax2, relax2_iterative, relaxation_chain,
    solve_relaxation_lp, CutMatrix, Level,
};
use bernpop::{BoxDomain, MultiIndex, Polynomial, Rational, Scalar};
use common::{grid_min, random_poly, unit_point, RandomPoly};
use proptest::prelude::*;

fn q(v: i64) -> Rational {
    Rational::from_i64(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bernstein_round_trip_is_exact(rp in random_poly(3, 4, 8), extra in 0u32..=2) {
        let p = rp.build::<Rational>();
        let delta = MultiIndex(rp.delta.iter().map(|d| d + extra).collect());
        let bf = to_bernstein(&p, &delta).unwrap();
        prop_assert_eq!(bf.to_monomial(), p);
    }

    #[test]
    fn coefficients_enclose_the_range(rp in random_poly(3, 4, 8), x in unit_point(3)) {
        let p = rp.build::<f64>();
        let x = &x[..rp.dim()];
        let bf = to_bernstein(&p, &rp.degree()).unwrap();
        let v = p.eval(x).unwrap();
        let tol = 1e-9 * (1.0 + bf.max_coefficient().abs());
        prop_assert!(min_coefficient(&bf).0 <= v + tol);
        prop_assert!(v <= bf.max_coefficient() + tol);
        let casteljau = bernstein_eval(&bf, x).unwrap();
        prop_assert!((casteljau - v).abs() <= tol, "{} vs {}", casteljau, v);
    }

    #[test]
    fn basis_is_a_partition_of_unity_under_its_maxima(delta in proptest::collection::vec(0u32..=5, 1..=3), x in unit_point(3)) {
        let delta = MultiIndex(delta);
        let x = &x[..delta.len()];
        let b = basis_values(&delta, x);
        let u = upper_bounds::<f64>(&delta);
        prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (bi, ui) in b.iter().zip(&u.u) {
            prop_assert!(*bi >= 0.0 && *bi <= ui + 1e-12);
        }
    }

    #[test]
    fn elevation_rows_sum_to_ones(k in proptest::collection::vec(0u32..=3, 1..=2), extra in proptest::collection::vec(0u32..=3, 2)) {
        let k = MultiIndex(k);
        let delta = MultiIndex(k.0.iter().zip(&extra).map(|(a, b)| a + b).collect());
        let len = TensorShape::new(delta.clone()).len();
        let mut total = vec![q(0); len];
        for i in TensorShape::new(k.clone()).indices() {
            let row = elevation_row::<Rational>(&i, &k, &delta).unwrap();
            for (t, r) in total.iter_mut().zip(row) {
                prop_assert!(r >= q(0));
                *t = t.clone() + r;
            }
        }
        prop_assert!(total.iter().all(|t| *t == q(1)));
    }

    #[test]
    fn greedy_matches_simplex(rp in random_poly(3, 3, 8)) {
        let p = rp.build::<f64>();
        let bf = to_bernstein(&p, &rp.degree()).unwrap();
        let u = upper_bounds(&rp.degree());
        let greedy = relax1(&bf, &u).bound;
        let lp = solve_relaxation_lp(&level1_lp(&bf, &u), &rp.degree()).unwrap().bound;
        prop_assert!((greedy - lp).abs() <= 1e-8 * (1.0 + lp.abs()), "{} vs {}", greedy, lp);
        prop_assert!(first_lp_bound(&bf, &u) <= greedy + 1e-9);
    }

    #[test]
    fn greedy_matches_simplex_exactly(rp in random_poly(2, 3, 6)) {
        let p = rp.build::<Rational>();
        let bf = to_bernstein(&p, &rp.degree()).unwrap();
        let u = upper_bounds(&rp.degree());
        let lp = solve_relaxation_lp(&level1_lp(&bf, &u), &rp.degree()).unwrap().bound;
        prop_assert_eq!(relax1(&bf, &u).bound, lp);
    }

    #[test]
    fn moment_vectors_are_recognised(delta in proptest::collection::vec(1u32..=4, 1..=3), x in unit_point(3)) {
        let delta = MultiIndex(delta);
        let x = &x[..delta.len()];
        let z = basis_values(&delta, x);
        let back = exactness_point(&z, &delta).expect("a moment vector is exact");
        for (a, b) in back.iter().zip(x) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_relaxations_are_attained(rp in random_poly(2, 4, 6)) {
        let p = rp.build::<f64>();
        let dom = BoxDomain::unit(rp.dim());
        let chain = relaxation_chain(&p, &Constraints::default(), &dom, &rp.degree(), Level::Two).unwrap();
        for o in [Some(&chain.p0), chain.p1.as_ref(), chain.p2.as_ref()].into_iter().flatten() {
            if let Some(w) = &o.witness {
                let v = p.eval(w).unwrap();
                prop_assert!((v - o.bound).abs() <= 1e-7 * (1.0 + v.abs()), "{} at {:?} vs {}", v, w, o.bound);
            }
        }
    }

    #[test]
    fn derivative_is_linear_and_obeys_the_product_rule(a in random_poly(3, 3, 5), b in random_poly(3, 3, 5), axis in 0usize..3) {
        prop_assume!(a.dim() == b.dim());
        let axis = axis % a.dim();
        let (p, r) = (a.build::<Rational>(), b.build::<Rational>());
        let d = |x: &Polynomial<Rational>| x.partial_derivative(axis).unwrap();
        let lin = p.scale(&q(3)).sub(&r.scale(&q(2))).unwrap();
        prop_assert_eq!(d(&lin), d(&p).scale(&q(3)).sub(&d(&r).scale(&q(2))).unwrap());
        let prod = p.mul(&r).unwrap();
        prop_assert_eq!(d(&prod), d(&p).mul(&r).unwrap().add(&p.mul(&d(&r)).unwrap()).unwrap());
    }

    #[test]
    fn restriction_agrees_with_evaluation(rp in random_poly(3, 3, 6), x in unit_point(3), axis in 0usize..3) {
        let p = rp.build::<f64>();
        let n = rp.dim();
        prop_assume!(n >= 2);
        let axis = axis % n;
        let x = &x[..n];
        let restricted = p.restrict(axis, &x[axis]).unwrap();
        let rest: Vec<f64> = x.iter().enumerate().filter(|&(j, _)| j != axis).map(|(_, v)| *v).collect();
        let lhs = restricted.eval(&rest).unwrap();
        let rhs = p.eval(x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn unit_box_map_preserves_values(rp in random_poly(3, 3, 6), z in unit_point(3), lo in -3.0..0.0f64, w in 0.1..4.0f64) {
        let p = rp.build::<f64>();
        let n = rp.dim();
        let dom = BoxDomain::new(vec![lo; n], (0..n).map(|j| lo + w * (1.0 + j as f64)).collect()).unwrap();
        let (qp, map) = p.to_unit_box(&dom).unwrap();
        let z = &z[..n];
        let x = map.apply(z);
        let (a, b) = (qp.eval(z).unwrap(), p.eval(&x).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn splits_partition_the_box(lo in proptest::collection::vec(-2.0..0.5f64, 1..=3), w in 0.1..3.0f64, zero in any::<bool>()) {
        let dom = BoxDomain::new(lo.clone(), lo.iter().map(|l| l + w).collect()).unwrap();
        let strategy = if zero { SplitStrategy::ZeroCentered } else { SplitStrategy::LongestEdge };
        let (a, b) = split_box(&dom, strategy, 1e-12).unwrap();
        let axis = (0..dom.dim()).find(|&j| a.upper()[j] != dom.upper()[j]).unwrap();
        prop_assert_eq!(a.upper()[axis], b.lower()[axis]);
        prop_assert_eq!(a.lower()[axis], dom.lower()[axis]);
        prop_assert_eq!(b.upper()[axis], dom.upper()[axis]);
        for j in (0..dom.dim()).filter(|&j| j != axis) {
            prop_assert_eq!(a.lower()[j], dom.lower()[j]);
            prop_assert_eq!(b.upper()[j], dom.upper()[j]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// `p0 ≤ first ≤ p1 ≤ p2 ≤ min over a grid`.
    #[test]
    fn relaxations_are_ordered(rp in random_poly(3, 4, 8)) {
        let p = rp.build::<f64>();
        let dom = BoxDomain::unit(rp.dim());
        let c = relaxation_chain(&p, &Constraints::default(), &dom, &rp.degree(), Level::Two).unwrap();
        let (p0, first, p1, p2) = (c.p0.bound, c.first.unwrap(), c.p1.unwrap().bound, c.p2.unwrap().bound);
        let tol = 1e-8 * (1.0 + p0.abs());
        let grid = grid_min(&p, if rp.dim() == 3 { 9 } else { 21 });
        prop_assert!(p0 <= first + tol, "p0 {} first {}", p0, first);
        prop_assert!(first <= p1 + tol, "first {} p1 {}", first, p1);
        prop_assert!(p1 <= p2 + tol, "p1 {} p2 {}", p1, p2);
        prop_assert!(p2 <= grid + tol, "p2 {} grid {}", p2, grid);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn row_generation_matches_the_full_lp(rp in random_poly(2, 4, 8)) {
        let p = rp.build::<f64>();
        let bf = to_bernstein(&p, &rp.degree()).unwrap();
        let u = upper_bounds(&rp.degree());
        let cuts = CutMatrix::build(&rp.degree());
        let it = relax2_iterative(&bf, &u, &cuts).unwrap();
        let full = relax2(&bf, &u, &cuts).unwrap();
        prop_assert!((it.bound - full.bound).abs() <= 1e-8 * (1.0 + full.bound.abs()), "{} vs {}", it.bound, full.bound);
        prop_assert!(it.activated_rows.len() <= cuts.len());
        prop_assert!(relax0(&bf).bound <= it.bound + 1e-9);
    }

    #[test]
    fn lp_weak_duality(
        c in proptest::collection::vec(-5i64..=5, 3),
        rows in proptest::collection::vec(proptest::collection::vec(-4i64..=4, 3), 1..=4),
        x0 in proptest::collection::vec(0i64..=3, 3),
        slack in proptest::collection::vec(0i64..=2, 4),
    ) {
        let f = |v: &[i64]| v.iter().map(|&a| a as f64).collect::<Vec<f64>>();
        let mut lp = LinearProgram::new(f(&c));
        lp.upper = vec![Some(5.0); 3];
        for (row, s) in rows.iter().zip(&slack) {
            let rhs: i64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum::<i64>() + s;
            lp.add_le(f(row), rhs as f64);
        }
        let sol = lp.solve().unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let at_x0: f64 = c.iter().zip(&x0).map(|(a, b)| (a * b) as f64).sum();
        prop_assert!(sol.value <= at_x0 + 1e-9);
        let dual = lp.dual_bound(sol.duals.as_ref().unwrap()).unwrap();
        prop_assert!(dual <= sol.value + 1e-7, "dual {} primal {}", dual, sol.value);
        prop_assert!((dual - sol.value).abs() < 1e-6);

        // Same program in exact arithmetic.
        let g = |v: &[i64]| v.iter().map(|&a| q(a)).collect::<Vec<Rational>>();
        let mut exact = LinearProgram::new(g(&c));
        exact.upper = vec![Some(q(5)); 3];
        for (row, s) in rows.iter().zip(&slack) {
            let rhs: i64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum::<i64>() + s;
            exact.add_le(g(row), q(rhs));
        }
        let esol = exact.solve().unwrap();
        prop_assert!((esol.value.to_f64() - sol.value).abs() < 1e-9);
        prop_assert_eq!(exact.dual_bound(esol.duals.as_ref().unwrap()).unwrap(), esol.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn branch_and_bound_encloses_the_minimum(rp in random_poly(2, 4, 6), level in 0usize..4) {
        let p = rp.build::<f64>();
        let level = [Level::Zero, Level::FirstLp, Level::One, Level::Two][level];
        let dom = BoxDomain::unit(rp.dim());
        let cfg = BnbConfig { level, epsilon: 1e-6, max_boxes: 20_000, ..BnbConfig::default() };
        let r = branch_and_bound(&p, &Constraints::default(), &dom, &cfg).unwrap();
        let grid = grid_min(&p, 41);
        let tol = 1e-9 * (1.0 + grid.abs());
        prop_assert!(r.lower_bound <= grid + tol, "lower {} grid {}", r.lower_bound, grid);
        prop_assert!(r.lower_bound <= r.upper_bound + tol);
        prop_assert!((p.eval(&r.witness).unwrap() - r.upper_bound).abs() <= tol);
        if r.converged {
            prop_assert!(r.upper_bound - r.lower_bound <= 1e-6 * r.upper_bound.abs().max(1.0) * (1.0 + 1e-9));
        }
    }
}

#[test]
fn random_poly_covers_its_support() {
    let rp = RandomPoly { delta: vec![2, 3], terms: vec![(vec![2, 0], 1), (vec![0, 3], -2)] };
    let p = rp.build::<f64>();
    assert!(p.support_degree().le(&rp.degree()));
}
