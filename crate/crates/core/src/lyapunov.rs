//! Lyapunov certificate checks and the bundled benchmark set.
//!
//! A candidate `V` for `dx/dt = f(x)` is accepted on a region when both
//! `V ≥ 0` and `−V̇ = −∇V·f ≥ 0` there, each certified by a lower bound from
//! branch-and-bound. Boxes are split through the origin so that the
//! equilibrium stays a box corner.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bnb::{branch_and_bound, BnbConfig, BnbResult, Constraints, SplitStrategy};
use crate::error::{Error, Result};
use crate::poly::{BoxDomain, Polynomial};
use crate::problem::{ExpectedVerdict, Problem, ProblemSpec};
use crate::scalar::Scalar;

/// Verdict threshold on both lower bounds.
pub const VERDICT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem<S> {
    f: Vec<Polynomial<S>>,
}

impl<S: Scalar> OdeSystem<S> {
    pub fn new(f: Vec<Polynomial<S>>) -> Result<Self> {
        let n = f.len();
        if let Some(bad) = f.iter().find(|fr| fr.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.dim(),
            });
        }
        Ok(OdeSystem { f })
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn field(&self) -> &[Polynomial<S>] {
        &self.f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCase<S> {
    pub name: String,
    pub system: OdeSystem<S>,
    pub v: Polynomial<S>,
    pub region: BoxDomain,
    pub expected_verdict: Option<ExpectedVerdict>,
}

impl<S: Scalar> LyapunovCase<S> {
    pub fn from_problem(p: &Problem<S>) -> Result<Self> {
        let field = p
            .field
            .clone()
            .ok_or_else(|| Error::Parse(format!("{} has no vector field", p.name)))?;
        Ok(LyapunovCase {
            name: p.name.clone(),
            system: OdeSystem::new(field)?,
            v: p.objective.clone(),
            region: p.domain.clone(),
            expected_verdict: p.expected_verdict,
        })
    }

    pub fn vdot(&self) -> Result<Polynomial<S>> {
        self.v.lie_derivative(self.system.field())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub v_bound: f64,
    pub vdot_bound: f64,
    pub stable: bool,
    pub v_run: BnbResult,
    pub vdot_run: BnbResult,
}

/// Lower-bounds `V` and `−V̇` over the region and accepts when both are
/// `≥ −1e−9`. The split strategy is forced to `ZeroCentered`.
pub fn verify_lyapunov<S: Scalar>(case: &LyapunovCase<S>, cfg: &BnbConfig) -> Result<Verdict> {
    let n = case.v.dim();
    if case.system.dim() != n || case.region.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if case.system.dim() != n { case.system.dim() } else { case.region.dim() },
        });
    }
    let origin = vec![0.0; n];
    if !case.region.contains(&origin) {
        return Err(Error::InvalidBox(format!("{}: region does not contain the origin", case.name)));
    }
    let v0 = case.v.eval_f64(&origin)?.to_f64();
    if v0 != 0.0 {
        log::warn!("{}: V(0) = {v0}, expected 0", case.name);
    }
    let cfg = BnbConfig {
        split: SplitStrategy::ZeroCentered,
        ..cfg.clone()
    };
    let neg_vdot = case.vdot()?.neg();
    let none = Constraints::default();
    // Independent runs; sequential unless the caller's rayon pool has spare threads.
    let (v_run, vdot_run) = rayon::join(
        || branch_and_bound(&case.v, &none, &case.region, &cfg),
        || branch_and_bound(&neg_vdot, &none, &case.region, &cfg),
    );
    let (v_run, vdot_run) = (v_run?, vdot_run?);
    let stable = v_run.lower_bound >= -VERDICT_TOLERANCE && vdot_run.lower_bound >= -VERDICT_TOLERANCE;
    Ok(Verdict {
        v_bound: v_run.lower_bound,
        vdot_bound: vdot_run.lower_bound,
        stable,
        v_run,
        vdot_run,
    })
}

/// A bundled problem file.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub spec: ProblemSpec,
}

const FIXTURES: &[(&str, &str)] = &[
    ("himmelblau", include_str!("../fixtures/himmelblau.json")),
    ("motzkin3", include_str!("../fixtures/motzkin3.json")),
    ("algebraic4", include_str!("../fixtures/algebraic4.json")),
    ("rlt_example", include_str!("../fixtures/rlt_example.json")),
    ("square", include_str!("../fixtures/square.json")),
    ("sum_of_squares", include_str!("../fixtures/sum_of_squares.json")),
    ("lyapunov1", include_str!("../fixtures/lyapunov1.json")),
    ("lyapunov2", include_str!("../fixtures/lyapunov2.json")),
    ("lyapunov3", include_str!("../fixtures/lyapunov3.json")),
    ("lyapunov4", include_str!("../fixtures/lyapunov4.json")),
    ("lyapunov5", include_str!("../fixtures/lyapunov5.json")),
    ("lyapunov6", include_str!("../fixtures/lyapunov6.json")),
    ("lyapunov7", include_str!("../fixtures/lyapunov7.json")),
    ("lyapunov8", include_str!("../fixtures/lyapunov8.json")),
    ("lyapunov9", include_str!("../fixtures/lyapunov9.json")),
];

/// Every bundled problem, in a fixed order.
pub fn benchmark_registry() -> Vec<Benchmark> {
    FIXTURES
        .iter()
        .map(|(name, text)| Benchmark {
            name,
            spec: ProblemSpec::from_json(text).expect("bundled fixtures parse"),
        })
        .collect()
}

pub fn benchmark(name: &str) -> Option<Benchmark> {
    benchmark_registry().into_iter().find(|b| b.name == name)
}

/// Problem files from a directory, sorted by file name.
pub fn load_fixture_dir(dir: &Path) -> Result<Vec<(String, ProblemSpec)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, ProblemSpec::load(&p)?))
        })
        .collect()
}

/// Absolute tolerance when comparing a transcribed derivative with the
/// computed one; transcriptions round coefficients to a few decimals.
pub const DERIVATIVE_MATCH_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub name: String,
    pub matches: bool,
    pub max_abs_diff: f64,
    /// `(exponents, computed, transcribed)` for every term off by more than
    /// the tolerance.
    pub mismatches: Vec<(Vec<u32>, f64, f64)>,
}

pub fn compare_derivative<S: Scalar>(name: &str, computed: &Polynomial<S>, printed: &Polynomial<S>) -> DerivativeCheck {
    let mut keys: Vec<_> = computed.terms().map(|(k, _)| k.clone()).collect();
    keys.extend(printed.terms().map(|(k, _)| k.clone()));
    keys.sort();
    keys.dedup();
    let mut max_abs_diff = 0.0f64;
    let mut mismatches = Vec::new();
    for k in keys {
        let a = computed.coeff(&k).to_f64();
        let b = printed.coeff(&k).to_f64();
        let d = (a - b).abs();
        max_abs_diff = max_abs_diff.max(d);
        if d > DERIVATIVE_MATCH_TOLERANCE {
            mismatches.push((k.0, a, b));
        }
    }
    DerivativeCheck {
        name: name.to_string(),
        matches: mismatches.is_empty(),
        max_abs_diff,
        mismatches,
    }
}

/// Compares `∇V·f` against each bundled transcribed derivative. The
/// computed derivative is what verification uses either way.
pub fn cross_check_appendix_derivatives() -> Vec<DerivativeCheck> {
    benchmark_registry()
        .iter()
        .filter_map(|b| {
            let p: Problem<crate::scalar::Rational> = b.spec.build().ok()?;
            let printed = p.printed_vdot.clone()?;
            let case = LyapunovCase::from_problem(&p).ok()?;
            let computed = case.vdot().ok()?;
            Some(compare_derivative(b.name, &computed, &printed))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiIndex;
    use crate::relax::Level;
    use crate::scalar::Rational;

    fn case(name: &str) -> LyapunovCase<f64> {
        let p: Problem<f64> = benchmark(name).unwrap().spec.build().unwrap();
        LyapunovCase::from_problem(&p).unwrap()
    }

    #[test]
    fn registry_contents() {
        let reg = benchmark_registry();
        assert_eq!(reg.len(), 15);
        let h: Problem<f64> = benchmark("himmelblau").unwrap().spec.build().unwrap();
        assert_eq!(h.domain, BoxDomain::new(vec![-5.0; 2], vec![5.0; 2]).unwrap());
        assert_eq!(h.known_optimum, Some(0.0));
        let m: Problem<f64> = benchmark("motzkin3").unwrap().spec.build().unwrap();
        assert_eq!(m.domain, BoxDomain::new(vec![-0.5; 3], vec![0.5; 3]).unwrap());
        assert_eq!(m.known_optimum, Some(0.0));
        let a: Problem<f64> = benchmark("algebraic4").unwrap().spec.build().unwrap();
        assert_eq!(a.domain, BoxDomain::new(vec![-0.1; 4], vec![0.1; 4]).unwrap());
        assert_eq!(a.known_optimum, Some(-1.0));
        let verdicts: Vec<_> = reg
            .iter()
            .filter_map(|b| b.spec.lyapunov.as_ref().and_then(|l| l.expected_verdict))
            .collect();
        assert_eq!(verdicts.len(), 9);
        assert_eq!(verdicts.iter().filter(|v| **v == ExpectedVerdict::Fail).count(), 2);
    }

    #[test]
    fn himmelblau_fixture_matches_formula() {
        let h: Problem<Rational> = benchmark("himmelblau").unwrap().spec.build().unwrap();
        assert_eq!(h.objective, crate::test_support::himmelblau_rational());
    }

    #[test]
    fn benchmark1_derivative() {
        // 40x³y + 10x³ − 50x² + 10xy³ + 10xy² − 10y³ − 10y²
        let expected = Polynomial::from_terms(
            2,
            vec![
                (vec![3, 1], 40.0),
                (vec![3, 0], 10.0),
                (vec![2, 0], -50.0),
                (vec![1, 3], 10.0),
                (vec![1, 2], 10.0),
                (vec![0, 3], -10.0),
                (vec![0, 2], -10.0),
            ],
        )
        .unwrap();
        assert_eq!(case("lyapunov1").vdot().unwrap(), expected);
    }

    #[test]
    fn derivative_cross_check() {
        let checks = cross_check_appendix_derivatives();
        assert_eq!(checks.len(), 9);
        for c in &checks {
            let expect_match = c.name != "lyapunov9";
            assert_eq!(c.matches, expect_match, "{c:?}");
        }
        assert_eq!(checks[0].max_abs_diff, 0.0);
        assert_eq!(checks[2].max_abs_diff, 0.0);
    }

    #[test]
    fn simple_systems() {
        let v = Polynomial::<f64>::variable(1, 0).pow(2);
        let f = vec![Polynomial::variable(1, 0).neg()];
        let stable = LyapunovCase {
            name: "decay".into(),
            system: OdeSystem::new(f).unwrap(),
            v: v.clone(),
            region: BoxDomain::new(vec![-1.0], vec![1.0]).unwrap(),
            expected_verdict: None,
        };
        assert_eq!(stable.vdot().unwrap().coeff(&MultiIndex(vec![2])), -2.0);
        let cfg = BnbConfig {
            level: Level::One,
            ..BnbConfig::default()
        };
        let verdict = verify_lyapunov(&stable, &cfg).unwrap();
        assert!(verdict.stable, "{verdict:?}");

        let unstable = LyapunovCase {
            system: OdeSystem::new(vec![Polynomial::variable(1, 0)]).unwrap(),
            ..stable.clone()
        };
        let verdict = verify_lyapunov(&unstable, &cfg).unwrap();
        assert!(!verdict.stable);
        assert!(verdict.vdot_bound <= -1.9);

        let off_origin = LyapunovCase {
            region: BoxDomain::new(vec![0.5], vec![1.0]).unwrap(),
            ..stable
        };
        assert!(verify_lyapunov(&off_origin, &cfg).is_err());
    }

    #[test]
    fn constant_v_has_zero_derivative() {
        let c = Polynomial::<f64>::constant(2, 3.0);
        let f = vec![Polynomial::variable(2, 1), Polynomial::variable(2, 0).neg()];
        assert!(c.lie_derivative(&f).unwrap().is_zero());
    }
}
