use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use bernpop::report::{from_json, to_json, Mode};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn scratch(contents: &str) -> PathBuf {
    static N: AtomicUsize = AtomicUsize::new(0);
    let path = std::env::temp_dir().join(format!(
        "bernpop-cli-{}-{}.json",
        std::process::id(),
        N.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&path, contents).unwrap();
    path
}

fn bernpop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bernpop")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const UNIT_SQUARE: &str = r#"{"dimension": 2,
    "objective": [{"exponents": [2, 0], "coeff": 1}, {"exponents": [0, 2], "coeff": 1}],
    "box": {"lower": [-1, -1], "upper": [1, 1]}}"#;

#[test]
fn relax_level_two_on_himmelblau() {
    let h = fixture("himmelblau");
    let o = bernpop(&["relax", "--level", "2", "--output", "json", h.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &from_json(&stdout(&o)).unwrap()[0];
    let b = r.bounds.as_ref().unwrap();
    assert_eq!(b.p0, -1170.0);
    assert!((b.p1.unwrap() + 911.47).abs() < 0.01);
    assert!((b.p2.unwrap() + 856.42).abs() < 0.01);
    assert_eq!(b.cut_rows, Some(200));
    assert!(b.activated_rows.unwrap() <= 10);
}

#[test]
fn bnb_on_himmelblau_finds_zero() {
    let h = fixture("himmelblau");
    let o = bernpop(&["bnb", "--level", "0", "--eps", "1e-9", h.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().find(|l| l.starts_with("ID")).unwrap().split_whitespace().collect();
    assert_eq!(header, ["ID", "level", "Sub", "Time", "Cutoff", "Mono", "Sub*", "Cutoff*", "Time*", "Opt"]);

    let o = bernpop(&["bnb", "--level", "0", "--eps", "1e-9", "--output", "json", h.to_str().unwrap()]);
    let b = from_json(&stdout(&o)).unwrap().remove(0).bnb.unwrap();
    assert!(b.lower <= 0.0 && 0.0 <= b.upper, "[{}, {}]", b.lower, b.upper);
    assert!(b.upper - b.lower <= 1e-6);
}

#[test]
fn uniform_degree_flag() {
    let p = scratch(UNIT_SQUARE);
    let o = bernpop(&["relax", "--level", "1", "--degree", "2", "--output", "json", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let b = from_json(&stdout(&o)).unwrap().remove(0).bounds.unwrap();
    assert_eq!(b.degree, [2, 2]);
    assert!((b.p1.unwrap() + 0.5).abs() < 1e-12);
    assert!(b.p2.is_none());
}

#[test]
fn rational_mode_prints_fractions() {
    let p = scratch(UNIT_SQUARE);
    let o = bernpop(&["relax", "--arith", "rational", "--output", "json", p.to_str().unwrap()]);
    let b = from_json(&stdout(&o)).unwrap().remove(0).bounds.unwrap();
    let exact = b.exact.unwrap();
    assert_eq!(exact.p0, "-2");
    assert_eq!(exact.p1.as_deref(), Some("-1/2"));
    assert_eq!(exact.p2.as_deref(), Some("0"));
    let text = stdout(&bernpop(&["relax", "--arith", "rational", p.to_str().unwrap()]));
    assert!(text.contains("[-1/2]"), "{text}");
}

#[test]
fn input_errors_exit_one_with_distinct_messages() {
    let malformed = scratch("{\"dimension\": 2,");
    let wrong_dim = scratch(&UNIT_SQUARE.replace("\"dimension\": 2", "\"dimension\": 3"));
    let p = scratch(UNIT_SQUARE);
    let cases: [(Vec<&str>, &str); 5] = [
        (vec!["relax", malformed.to_str().unwrap()], "EOF"),
        (vec!["relax", wrong_dim.to_str().unwrap()], "dimension mismatch"),
        (vec!["relax", "--degree", "1", p.to_str().unwrap()], "below the polynomial degree"),
        (vec!["relax", "--degree", "2,2,2", p.to_str().unwrap()], "dimension mismatch"),
        (vec!["relax", "/nonexistent/problem.json"], "No such file"),
    ];
    for (args, needle) in cases {
        let o = bernpop(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).is_empty());
    }
    let o = bernpop(&["relax", "--level", "7", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown level"));
    let o = bernpop(&["bnb", "--no-such-flag", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = bernpop(&["lyapunov", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("vector field"));
}

#[test]
fn exhausted_budget_exits_two() {
    let h = fixture("himmelblau");
    let o = bernpop(&["bnb", "--max-boxes", "3", "--output", "json", h.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let b = from_json(&stdout(&o)).unwrap().remove(0).bnb.unwrap();
    assert!(!b.converged);
    assert!(b.lower <= b.upper);
}

#[test]
fn json_round_trips_byte_for_byte() {
    let h = fixture("himmelblau");
    for mode in ["relax", "bnb"] {
        let o = bernpop(&[mode, "--output", "json", h.to_str().unwrap()]);
        let text = stdout(&o);
        let reparsed = from_json(&text).unwrap();
        assert_eq!(to_json(&reparsed).unwrap() + "\n", text);
    }
}

#[test]
fn single_threaded_runs_are_reproducible() {
    let h = fixture("himmelblau");
    let run = || {
        let o = bernpop(&["bnb", "--level", "2", "--output", "json", h.to_str().unwrap()]);
        let r: Vec<_> = from_json(&stdout(&o)).unwrap().iter().map(|r| r.without_timings()).collect();
        to_json(&r).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn bench_runs_selected_problems_in_parallel() {
    let o = bernpop(&["bench", "--jobs", "2", "--level", "0,1", "--output", "json", "lyapunov1", "lyapunov8", "himmelblau"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let reports = from_json(&stdout(&o)).unwrap();
    assert_eq!(reports.len(), 6);
    let names: Vec<(&str, Mode)> = reports.iter().map(|r| (r.problem.as_str(), r.mode)).collect();
    assert_eq!(names[0], ("himmelblau", Mode::Bnb));
    assert_eq!(names[2], ("lyapunov1", Mode::Lyapunov));
    let v8 = reports.iter().find(|r| r.problem == "lyapunov8").unwrap().verdict.as_ref().unwrap();
    assert!(!v8.stable);

    let text = stdout(&bernpop(&["bench", "--level", "0", "lyapunov1", "lyapunov2"]));
    assert!(text.lines().next().unwrap().starts_with("case"), "{text}");
    assert!(text.contains("verified"));

    let o = bernpop(&["bench", "nonexistent"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_reads_a_fixture_directory() {
    let dir = std::env::temp_dir().join(format!("bernpop-fixtures-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("square.json"), UNIT_SQUARE).unwrap();
    std::fs::write(dir.join("notes.txt"), "ignored").unwrap();
    let o = bernpop(&["bench", "--fixtures", dir.to_str().unwrap(), "--output", "json"]);
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let reports = from_json(&stdout(&o)).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].problem, "square");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(bernpop(&["--help"]).status.code(), Some(0));
    let v = bernpop(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains(env!("CARGO_PKG_VERSION")));
}
