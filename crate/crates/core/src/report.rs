//! Run reports: one JSON document per run, plus aligned text tables.
//!
//! Timing fields live only under `timings`, so two runs of the same input
//! agree byte for byte once those are zeroed (see [`Report::without_timings`]).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bnb::BnbResult;
use crate::error::{Error, Result};
use crate::lyapunov::Verdict;
use crate::poly::BoxDomain;
use crate::problem::ExpectedVerdict;
use crate::relax::{Level, RelaxationChain};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Relax,
    Bnb,
    Lyapunov,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Float,
    Rational,
}

impl std::str::FromStr for Arithmetic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(Arithmetic::Float),
            "rational" => Ok(Arithmetic::Rational),
            other => Err(Error::InvalidConfig(format!("unknown arithmetic {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: Mode,
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
    pub arithmetic: Arithmetic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bnb: Option<BnbSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictSection>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub degree: Vec<u32>,
    pub p0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    /// Fraction strings, present in rational mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activated_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_level: Option<Level>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactBounds {
    pub p0: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbSection {
    #[serde(with = "extended_f64")]
    pub lower: f64,
    /// `inf` when no feasible point was found.
    #[serde(with = "extended_f64")]
    pub upper: f64,
    pub witness: Vec<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_optimum: Option<f64>,
    pub stats: Counters,
}

/// The counting columns of a branch-and-bound run; times go to [`Timings`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub subdivisions: usize,
    pub cutoff_count: usize,
    pub mono_count: usize,
    pub edge_subdivisions: usize,
    pub edge_cutoffs: usize,
    pub exact_leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSection {
    pub v_bound: f64,
    pub vdot_bound: f64,
    pub stable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedVerdict>,
    pub v: BnbSection,
    pub vdot: BnbSection,
}

/// Wall-clock seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bnb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vdot: Option<f64>,
}

/// Finite values as JSON numbers; infinities and NaN as `"inf"`, `"-inf"`, `"nan"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

impl BnbSection {
    pub fn from_result(r: &BnbResult, known_optimum: Option<f64>) -> Self {
        BnbSection {
            lower: r.lower_bound,
            upper: r.upper_bound,
            witness: r.witness.clone(),
            converged: r.converged,
            known_optimum,
            stats: Counters {
                subdivisions: r.stats.subdivisions,
                cutoff_count: r.stats.cutoff_count,
                mono_count: r.stats.mono_count,
                edge_subdivisions: r.stats.edge_subdivisions,
                edge_cutoffs: r.stats.edge_cutoffs,
                exact_leaves: r.stats.exact_leaves,
            },
        }
    }
}

impl Report {
    pub fn relax<S: Scalar>(
        problem: &str,
        level: Level,
        arithmetic: Arithmetic,
        chain: &RelaxationChain<S>,
        domain: &BoxDomain,
        elapsed: f64,
    ) -> Self {
        let exact = S::EXACT.then(|| ExactBounds {
            p0: chain.p0.bound.render_exact(),
            first: chain.first.as_ref().map(|v| v.render_exact()),
            p1: chain.p1.as_ref().map(|o| o.bound.render_exact()),
            p2: chain.p2.as_ref().map(|o| o.bound.render_exact()),
        });
        let witness = chain.witness(domain);
        Report {
            mode: Mode::Relax,
            problem: problem.to_string(),
            level: Some(level),
            arithmetic,
            bounds: Some(Bounds {
                degree: chain.degree.0.clone(),
                p0: chain.p0.bound.to_f64(),
                first: chain.first.as_ref().map(|v| v.to_f64()),
                p1: chain.p1.as_ref().map(|o| o.bound.to_f64()),
                p2: chain.p2.as_ref().map(|o| o.bound.to_f64()),
                exact,
                cut_rows: chain.cut_rows,
                activated_rows: chain.p2.as_ref().map(|o| o.activated_rows.len()),
                witness_level: witness.as_ref().map(|(l, _)| *l),
                witness: witness.map(|(_, w)| w),
            }),
            bnb: None,
            verdict: None,
            timings: Timings {
                total: elapsed,
                ..Timings::default()
            },
        }
    }

    pub fn bnb(
        problem: &str,
        level: Level,
        arithmetic: Arithmetic,
        result: &BnbResult,
        known_optimum: Option<f64>,
        elapsed: f64,
    ) -> Self {
        Report {
            mode: Mode::Bnb,
            problem: problem.to_string(),
            level: Some(level),
            arithmetic,
            bounds: None,
            bnb: Some(BnbSection::from_result(result, known_optimum)),
            verdict: None,
            timings: Timings {
                total: elapsed,
                bnb: Some(result.stats.elapsed),
                edge: Some(result.stats.edge_elapsed),
                ..Timings::default()
            },
        }
    }

    pub fn lyapunov(
        problem: &str,
        level: Level,
        arithmetic: Arithmetic,
        verdict: &Verdict,
        expected: Option<ExpectedVerdict>,
        elapsed: f64,
    ) -> Self {
        Report {
            mode: Mode::Lyapunov,
            problem: problem.to_string(),
            level: Some(level),
            arithmetic,
            bounds: None,
            bnb: None,
            verdict: Some(VerdictSection {
                v_bound: verdict.v_bound,
                vdot_bound: verdict.vdot_bound,
                stable: verdict.stable,
                expected,
                v: BnbSection::from_result(&verdict.v_run, None),
                vdot: BnbSection::from_result(&verdict.vdot_run, None),
            }),
            timings: Timings {
                total: elapsed,
                v: Some(verdict.v_run.stats.elapsed),
                vdot: Some(verdict.vdot_run.stats.elapsed),
                ..Timings::default()
            },
        }
    }

    /// False when a branch-and-bound run stopped on its budget.
    pub fn converged(&self) -> bool {
        self.bnb.as_ref().is_none_or(|b| b.converged)
            && self.verdict.as_ref().is_none_or(|v| v.v.converged && v.vdot.converged)
    }

    /// Same report with every timing zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> Self {
        let zero = |t: Option<f64>| t.map(|_| 0.0);
        let mut out = self.clone();
        out.timings = Timings {
            total: 0.0,
            bnb: zero(self.timings.bnb),
            edge: zero(self.timings.edge),
            v: zero(self.timings.v),
            vdot: zero(self.timings.vdot),
        };
        out
    }
}

pub fn to_json(reports: &[Report]) -> Result<String> {
    let text = if let [single] = reports {
        serde_json::to_string_pretty(single)?
    } else {
        serde_json::to_string_pretty(reports)?
    };
    Ok(text)
}

/// Inverse of [`to_json`]: accepts one report or an array of them.
pub fn from_json(text: &str) -> Result<Vec<Report>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Box<Report>),
        Many(Vec<Report>),
    }
    Ok(match serde_json::from_str(text)? {
        OneOrMany::One(r) => vec![*r],
        OneOrMany::Many(v) => v,
    })
}

/// Right-aligned columns, first column left-aligned.
fn table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let mut text = String::new();
        for (k, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if k == 0 {
                let _ = write!(text, "{cell:<w$}");
            } else {
                let _ = write!(text, "  {cell:>w$}");
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(headers);
    for row in rows {
        line(row);
    }
    out
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        format!("{v}")
    }
}

fn secs(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |t| format!("{t:.3}"))
}

fn level_label(l: Option<Level>) -> &'static str {
    l.map_or("-", Level::label)
}

fn point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.9}")).collect();
    format!("({})", parts.join(", "))
}

/// The relaxation chain of one problem.
pub fn relax_text(r: &Report) -> String {
    let mut out = String::new();
    let Some(b) = &r.bounds else {
        return out;
    };
    let degree: Vec<String> = b.degree.iter().map(u32::to_string).collect();
    let _ = writeln!(out, "problem  {}", r.problem);
    let _ = writeln!(out, "degree   ({})", degree.join(","));
    let exact = b.exact.as_ref();
    let mut row = |name: &str, v: Option<f64>, e: Option<&String>| {
        if let Some(v) = v {
            match e {
                Some(e) => {
                    let _ = writeln!(out, "{name:<8} {v}  [{e}]");
                }
                None => {
                    let _ = writeln!(out, "{name:<8} {v}");
                }
            }
        }
    };
    row("p0", Some(b.p0), exact.map(|e| &e.p0));
    row("first", b.first, exact.and_then(|e| e.first.as_ref()));
    row("p1", b.p1, exact.and_then(|e| e.p1.as_ref()));
    row("p2", b.p2, exact.and_then(|e| e.p2.as_ref()));
    if let (Some(total), Some(active)) = (b.cut_rows, b.activated_rows) {
        let _ = writeln!(out, "cuts     {active} of {total} rows activated");
    }
    match (&b.witness, b.witness_level) {
        (Some(w), Some(l)) => {
            let _ = writeln!(out, "witness  {} (level {} is exact)", point(w), l.label());
        }
        _ => {
            let _ = writeln!(out, "witness  none");
        }
    }
    let _ = writeln!(out, "time     {:.3}s", r.timings.total);
    out
}

/// Branch-and-bound runs with the columns ID, level, Sub, Time, Cutoff, Mono,
/// Sub*, Cutoff*, Time*, Opt. Starred columns count edge problems.
pub fn bnb_table(reports: &[&Report]) -> String {
    let headers = ["ID", "level", "Sub", "Time", "Cutoff", "Mono", "Sub*", "Cutoff*", "Time*", "Opt"]
        .map(String::from);
    let rows: Vec<Vec<String>> = reports
        .iter()
        .filter_map(|r| r.bnb.as_ref().map(|b| (r, b)))
        .map(|(r, b)| {
            let opt = if b.converged { num(b.upper) } else { format!("{} (open)", num(b.upper)) };
            vec![
                r.problem.clone(),
                level_label(r.level).into(),
                b.stats.subdivisions.to_string(),
                secs(r.timings.bnb),
                b.stats.cutoff_count.to_string(),
                b.stats.mono_count.to_string(),
                b.stats.edge_subdivisions.to_string(),
                b.stats.edge_cutoffs.to_string(),
                secs(r.timings.edge),
                opt,
            ]
        })
        .collect();
    table(&headers, &rows)
}

/// One branch-and-bound run: the enclosure, the minimiser and its table row.
pub fn bnb_text(r: &Report) -> String {
    let mut out = String::new();
    if let Some(b) = &r.bnb {
        let _ = writeln!(out, "problem    {}", r.problem);
        let _ = writeln!(out, "interval   [{}, {}]", num(b.lower), num(b.upper));
        let _ = writeln!(out, "width      {}", num(b.upper - b.lower));
        let _ = writeln!(out, "witness    {}", point(&b.witness));
        if let Some(k) = b.known_optimum {
            let _ = writeln!(out, "known opt  {k}");
        }
        let _ = writeln!(out, "converged  {}", b.converged);
        out.push('\n');
        out.push_str(&bnb_table(&[r]));
    }
    out
}

/// Lyapunov verdicts, one row per case and a column pair per level.
pub fn lyapunov_table(reports: &[&Report]) -> String {
    let mut levels: Vec<Level> = reports.iter().filter_map(|r| r.level).collect();
    levels.sort();
    levels.dedup();
    let mut cases: Vec<&str> = Vec::new();
    for r in reports {
        if r.verdict.is_some() && !cases.contains(&r.problem.as_str()) {
            cases.push(&r.problem);
        }
    }
    let mut headers = vec!["case".to_string()];
    for l in &levels {
        headers.push(format!("pV({})", l.label()));
        headers.push(format!("pVdot({})", l.label()));
    }
    headers.push("verdict".into());
    headers.push("expected".into());
    let rows: Vec<Vec<String>> = cases
        .iter()
        .map(|case| {
            let mut row = vec![case.to_string()];
            let mut verdict = None;
            let mut expected = None;
            for l in &levels {
                let hit = reports
                    .iter()
                    .find(|r| r.problem == *case && r.level == Some(*l))
                    .and_then(|r| r.verdict.as_ref());
                match hit {
                    Some(v) => {
                        row.push(num(v.v_bound));
                        row.push(num(v.vdot_bound));
                        verdict = Some(v.stable);
                        expected = expected.or(v.expected);
                    }
                    None => {
                        row.push("-".into());
                        row.push("-".into());
                    }
                }
            }
            row.push(match verdict {
                Some(true) => "verified".into(),
                Some(false) => "rejected".into(),
                None => "-".into(),
            });
            row.push(match expected {
                Some(ExpectedVerdict::Pass) => "pass".into(),
                Some(ExpectedVerdict::Fail) => "fail".into(),
                None => "-".into(),
            });
            row
        })
        .collect();
    table(&headers, &rows)
}

/// Text for any mix of reports: relaxation blocks, then the
/// branch-and-bound table, then the Lyapunov table.
pub fn to_text(reports: &[Report]) -> String {
    let mut parts = Vec::new();
    for r in reports.iter().filter(|r| r.mode == Mode::Relax) {
        parts.push(relax_text(r));
    }
    let bnb: Vec<&Report> = reports.iter().filter(|r| r.mode == Mode::Bnb).collect();
    if let [single] = bnb.as_slice() {
        parts.push(bnb_text(single));
    } else if !bnb.is_empty() {
        parts.push(bnb_table(&bnb));
    }
    let lyap: Vec<&Report> = reports.iter().filter(|r| r.mode == Mode::Lyapunov).collect();
    if !lyap.is_empty() {
        parts.push(lyapunov_table(&lyap));
    }
    parts.join("\n")
}
