use std::ffi::{CStr, CString};
use std::ptr;

use bernpop_ffi::*;

const SQUARES: &str = r#"{"dimension": 2,
    "objective": [{"exponents": [2, 0], "coeff": 1}, {"exponents": [0, 2], "coeff": 1}],
    "box": {"lower": [-1, -1], "upper": [1, 1]}}"#;

fn load(json: &str) -> (BpStatus, *mut BpProblem) {
    let c = CString::new(json).unwrap();
    let mut p = ptr::null_mut();
    let s = unsafe { bp_problem_from_json(c.as_ptr(), &mut p) };
    (s, p)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bp_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn relaxation_levels() {
    let (s, p) = load(SQUARES);
    assert_eq!(s, BpStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { bp_problem_dimension(p, &mut n) }, BpStatus::Ok);
    assert_eq!(n, 2);
    let mut v = 0.0;
    let expected = [(BpLevel::Zero, -2.0), (BpLevel::FirstLp, -0.5), (BpLevel::One, -0.5), (BpLevel::Two, 0.0)];
    for (level, want) in expected {
        assert_eq!(unsafe { bp_relax(p, level, &mut v) }, BpStatus::Ok);
        assert!((v - want).abs() < 1e-9, "{level:?}: {v}");
    }
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { bp_relax_exact(p, BpLevel::One, &mut text) }, BpStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(text) }.to_str().unwrap(), "-1/2");
    unsafe {
        bp_string_free(text);
        bp_problem_free(p);
    }
}

#[test]
fn branch_and_bound_with_witness() {
    let (_, p) = load(SQUARES);
    let opts = bp_bnb_options_default();
    let mut out = BpBnbResult::default();
    let mut w = [f64::NAN; 2];
    let s = unsafe { bp_bnb(p, &opts, &mut out, w.as_mut_ptr(), w.len()) };
    assert_eq!(s, BpStatus::Ok);
    assert!(out.converged);
    assert!(out.lower <= 0.0 && 0.0 <= out.upper + 1e-12);
    assert!(w.iter().all(|x| x.abs() < 1e-6), "{w:?}");

    let mut short = [0.0; 1];
    let s = unsafe { bp_bnb(p, &opts, &mut out, short.as_mut_ptr(), 1) };
    assert_eq!(s, BpStatus::InvalidArgument);
    assert!(last_error().contains("witness"));
    unsafe { bp_problem_free(p) };
}

#[test]
fn budget_exhaustion_is_reported() {
    let (_, p) = load(SQUARES);
    let mut opts = bp_bnb_options_default();
    opts.max_boxes = 1;
    let mut out = BpBnbResult::default();
    let s = unsafe { bp_bnb(p, &opts, &mut out, ptr::null_mut(), 0) };
    assert_eq!(s, BpStatus::NotConverged);
    assert!(!out.converged);
    assert!(out.lower <= out.upper);
    unsafe { bp_problem_free(p) };
}

#[test]
fn lyapunov_verdict() {
    let text = include_str!("../../core/fixtures/lyapunov1.json");
    let (s, p) = load(text);
    assert_eq!(s, BpStatus::Ok);
    let opts = bp_bnb_options_default();
    let mut v = BpVerdict::default();
    assert_eq!(unsafe { bp_lyapunov(p, &opts, &mut v) }, BpStatus::Ok);
    assert!(v.stable && v.converged);

    let (_, q) = load(SQUARES);
    assert_eq!(unsafe { bp_lyapunov(q, &opts, &mut v) }, BpStatus::ParseError);
    assert!(last_error().contains("vector field"));
    unsafe {
        bp_problem_free(p);
        bp_problem_free(q);
    }
}

#[test]
fn errors_map_to_codes() {
    let (s, p) = load("{");
    assert_eq!(s, BpStatus::ParseError);
    assert!(p.is_null());
    assert!(!last_error().is_empty());

    let (s, _) = load(&SQUARES.replace("\"dimension\": 2", "\"dimension\": 3"));
    assert_eq!(s, BpStatus::DimensionMismatch);
    assert!(last_error().contains("dimension"));

    let (s, _) = load(&SQUARES.replace("\"dimension\": 2,", "\"dimension\": 2, \"degree\": [1, 1],"));
    assert_eq!(s, BpStatus::DegreeError);

    let (s, _) = load(&SQUARES.replace("\"upper\": [1, 1]", "\"upper\": [1, -2]"));
    assert_eq!(s, BpStatus::InvalidArgument);

    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bp_problem_from_json(ptr::null(), &mut p) }, BpStatus::NullPointer);
    let bad = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { bp_problem_from_json(bad.as_ptr().cast(), &mut p) }, BpStatus::InvalidUtf8);
    let mut v = 0.0;
    assert_eq!(unsafe { bp_relax(ptr::null(), BpLevel::Zero, &mut v) }, BpStatus::NullPointer);

    // A success clears the message.
    let (s, p) = load(SQUARES);
    assert_eq!(s, BpStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe {
        bp_problem_free(p);
        bp_problem_free(ptr::null_mut());
        bp_string_free(ptr::null_mut());
    }
}

#[test]
fn infeasible_constraints() {
    // x ≤ -2 on [-1, 1].
    let json = r#"{"dimension": 1, "objective": [{"exponents": [2], "coeff": 1}],
        "box": {"lower": [-1], "upper": [1]},
        "constraints_linear": {"A": [[1]], "b": [-2]}}"#;
    let (_, p) = load(json);
    let mut v = 0.0;
    assert_eq!(unsafe { bp_relax(p, BpLevel::One, &mut v) }, BpStatus::Infeasible);
    unsafe { bp_problem_free(p) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(bp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
