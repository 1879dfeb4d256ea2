//! C interface to `bernpop`.
//!
//! Problems are opaque handles built from the same JSON accepted by the
//! command-line tool. Every call returns a [`BpStatus`]; on failure the
//! message is available from [`bp_last_error_message`] on the same thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bernpop::bnb::{branch_and_bound, BnbConfig, BnbResult, SplitStrategy};
use bernpop::lyapunov::{verify_lyapunov, LyapunovCase};
use bernpop::problem::{Problem, ProblemSpec};
use bernpop::relax::{relaxation_chain, Level, RelaxationChain};
use bernpop::{Error, Rational, Scalar};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    DimensionMismatch = 4,
    DegreeError = 5,
    InvalidArgument = 6,
    Infeasible = 7,
    SolverError = 8,
    /// Output is filled in, but the run stopped on its box budget.
    NotConverged = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpLevel {
    Zero = 0,
    FirstLp = 1,
    One = 2,
    Two = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpSplit {
    LongestEdge = 0,
    ZeroCentered = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpBnbOptions {
    pub level: BpLevel,
    pub epsilon: f64,
    pub max_boxes: usize,
    pub min_box_width: f64,
    pub split: BpSplit,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BpBnbResult {
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub subdivisions: usize,
    pub cutoffs: usize,
    pub mono: usize,
    pub edge_subdivisions: usize,
    pub edge_cutoffs: usize,
    pub elapsed: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BpVerdict {
    pub v_bound: f64,
    pub vdot_bound: f64,
    pub stable: bool,
    pub converged: bool,
}

/// Opaque problem handle.
pub struct BpProblem {
    spec: ProblemSpec,
    float: Problem<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> BpStatus {
    match err {
        Error::Json(_) | Error::Parse(_) => BpStatus::ParseError,
        Error::DimensionMismatch { .. } => BpStatus::DimensionMismatch,
        Error::DegreeTooSmall { .. } | Error::UnsupportedDegree(_) => BpStatus::DegreeError,
        Error::InvalidBox(_)
        | Error::InvalidConfig(_)
        | Error::OutsideUnitBox(_)
        | Error::IndexOutOfRange(_)
        | Error::BoxTooSmall(_) => BpStatus::InvalidArgument,
        Error::InfeasibleRelaxation => BpStatus::Infeasible,
        _ => BpStatus::SolverError,
    }
}

/// Runs `f`, records its error message and turns panics into a status.
fn guard(f: impl FnOnce() -> Result<BpStatus, (BpStatus, String)>) -> BpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == BpStatus::Ok {
                set_error("");
            }
            s
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            BpStatus::Panic
        }
    }
}

fn fail(e: Error) -> (BpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BpStatus, String) {
    (BpStatus::NullPointer, format!("{what} is null"))
}

fn level_of(l: BpLevel) -> Level {
    match l {
        BpLevel::Zero => Level::Zero,
        BpLevel::FirstLp => Level::FirstLp,
        BpLevel::One => Level::One,
        BpLevel::Two => Level::Two,
    }
}

fn chain_bound<S: Scalar>(chain: &RelaxationChain<S>, level: Level) -> S {
    match level {
        Level::Zero => chain.p0.bound.clone(),
        Level::FirstLp => chain.first.clone().expect("first-LP ran"),
        Level::One => chain.p1.as_ref().expect("level 1 ran").bound.clone(),
        Level::Two => chain.p2.as_ref().expect("level 2 ran").bound.clone(),
    }
}

fn relax_typed<S: Scalar>(problem: &Problem<S>, level: Level) -> Result<S, Error> {
    let delta = problem.effective_degree();
    let chain = relaxation_chain(&problem.objective, &problem.constraints, &problem.domain, &delta, level)?;
    Ok(chain_bound(&chain, level))
}

fn config_of(opts: &BpBnbOptions) -> BnbConfig {
    BnbConfig {
        level: level_of(opts.level),
        epsilon: opts.epsilon,
        max_boxes: opts.max_boxes,
        min_box_width: opts.min_box_width,
        split: match opts.split {
            BpSplit::LongestEdge => SplitStrategy::LongestEdge,
            BpSplit::ZeroCentered => SplitStrategy::ZeroCentered,
        },
        degree: None,
    }
}

fn bnb_result_of(r: &BnbResult) -> BpBnbResult {
    BpBnbResult {
        lower: r.lower_bound,
        upper: r.upper_bound,
        converged: r.converged,
        subdivisions: r.stats.subdivisions,
        cutoffs: r.stats.cutoff_count,
        mono: r.stats.mono_count,
        edge_subdivisions: r.stats.edge_subdivisions,
        edge_cutoffs: r.stats.edge_cutoffs,
        elapsed: r.stats.elapsed,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn bp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Defaults: level 0, epsilon 1e-9, one million boxes, longest-edge split.
#[no_mangle]
pub extern "C" fn bp_bnb_options_default() -> BpBnbOptions {
    let d = BnbConfig::default();
    BpBnbOptions {
        level: BpLevel::Zero,
        epsilon: d.epsilon,
        max_boxes: d.max_boxes,
        min_box_width: d.min_box_width,
        split: BpSplit::LongestEdge,
    }
}

/// Parses a problem file's contents. On success `*out` owns a handle that
/// must be released with [`bp_problem_free`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_problem_from_json(json: *const c_char, out: *mut *mut BpProblem) -> BpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (BpStatus::InvalidUtf8, e.to_string()))?;
        let spec = ProblemSpec::from_json(text).map_err(fail)?;
        let float = spec.build::<f64>().map_err(fail)?;
        *out = Box::into_raw(Box::new(BpProblem { spec, float }));
        Ok(BpStatus::Ok)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `problem` must come from [`bp_problem_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bp_problem_free(problem: *mut BpProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of variables.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_problem_dimension(problem: *const BpProblem, out: *mut usize) -> BpStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.float.objective.dim();
        Ok(BpStatus::Ok)
    })
}

/// Lower bound of the objective over the whole box at one relaxation level,
/// in binary64 arithmetic.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_relax(problem: *const BpProblem, level: BpLevel, out: *mut f64) -> BpStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = relax_typed(&p.float, level_of(level)).map_err(fail)?;
        Ok(BpStatus::Ok)
    })
}

/// As [`bp_relax`] but in exact rational arithmetic. `*out` receives a
/// fraction string such as `"-1170"` or `"-1/2"`, to be released with
/// [`bp_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bp_relax_exact(problem: *const BpProblem, level: BpLevel, out: *mut *mut c_char) -> BpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let exact = p.spec.build::<Rational>().map_err(fail)?;
        let bound = relax_typed(&exact, level_of(level)).map_err(fail)?;
        let text = CString::new(bound.render_exact()).expect("no interior NUL");
        *out = text.into_raw();
        Ok(BpStatus::Ok)
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn bp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Branch-and-bound over the problem's box and constraints. When `witness`
/// is non-null it receives the best point found; `witness_len` must then be
/// at least the dimension. Returns `NotConverged` with `out` filled in when
/// the box budget ran out.
///
/// # Safety
/// `problem` must be a live handle, `options` and `out` valid pointers, and
/// `witness` null or valid for `witness_len` writes.
#[no_mangle]
pub unsafe extern "C" fn bp_bnb(
    problem: *const BpProblem,
    options: *const BpBnbOptions,
    out: *mut BpBnbResult,
    witness: *mut f64,
    witness_len: usize,
) -> BpStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let opts = options.as_ref().ok_or_else(|| null("options"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let n = p.float.objective.dim();
        if !witness.is_null() && witness_len < n {
            return Err((
                BpStatus::InvalidArgument,
                format!("witness buffer holds {witness_len} values, need {n}"),
            ));
        }
        let cfg = config_of(opts);
        let r = branch_and_bound(&p.float.objective, &p.float.constraints, &p.float.domain, &cfg).map_err(fail)?;
        *out = bnb_result_of(&r);
        if !witness.is_null() && r.witness.len() == n {
            std::slice::from_raw_parts_mut(witness, n).copy_from_slice(&r.witness);
        }
        Ok(if r.converged { BpStatus::Ok } else { BpStatus::NotConverged })
    })
}

/// Lyapunov check for a problem file with a `lyapunov` section. The split
/// option is ignored; boxes are always split through the origin.
///
/// # Safety
/// `problem` must be a live handle, `options` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bp_lyapunov(
    problem: *const BpProblem,
    options: *const BpBnbOptions,
    out: *mut BpVerdict,
) -> BpStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let opts = options.as_ref().ok_or_else(|| null("options"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let case = LyapunovCase::from_problem(&p.float).map_err(fail)?;
        let v = verify_lyapunov(&case, &config_of(opts)).map_err(fail)?;
        let converged = v.v_run.converged && v.vdot_run.converged;
        *out = BpVerdict {
            v_bound: v.v_bound,
            vdot_bound: v.vdot_bound,
            stable: v.stable,
            converged,
        };
        Ok(if converged { BpStatus::Ok } else { BpStatus::NotConverged })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message() -> String {
        LAST_ERROR.with(|e| e.borrow().to_string_lossy().into_owned())
    }

    #[test]
    fn panics_become_a_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, BpStatus::Panic);
        assert!(message().contains("boom"));
    }

    #[test]
    fn errors_keep_their_message() {
        let s = guard(|| Err(fail(Error::InvalidConfig("bad eps".into()))));
        assert_eq!(s, BpStatus::InvalidArgument);
        assert!(message().contains("bad eps"));
        assert_eq!(guard(|| Ok(BpStatus::Ok)), BpStatus::Ok);
        assert_eq!(message(), "");
    }

    #[test]
    fn interior_nul_is_sanitised() {
        set_error("a\0b");
        assert_eq!(message(), "a b");
    }
}
