//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when a branch-and-bound run hit its budget
//! before converging, 1 on any input or configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::bnb::{branch_and_bound, BnbConfig, SplitStrategy};
use crate::error::{Error, Result};
use crate::lyapunov::{benchmark_registry, load_fixture_dir, verify_lyapunov, LyapunovCase};
use crate::poly::{Degree, MultiIndex};
use crate::problem::{Problem, ProblemSpec};
use crate::relax::{relaxation_chain, Level};
use crate::report::{self, Arithmetic, Mode, Report};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Parser)]
#[command(name = "bernpop", version, about = "Bernstein LP relaxations and branch-and-bound for polynomial minimisation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower bounds p0, first, p1 and p2 over the whole box.
    Relax(RunArgs),
    /// Branch-and-bound to an enclosure of the global minimum.
    Bnb(RunArgs),
    /// Check a Lyapunov candidate; the file needs a `lyapunov` section.
    Lyapunov(RunArgs),
    /// Run the bundled problems, or every file in a fixture directory.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub opts: Options,
    /// Problem file (JSON).
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub opts: Options,
    /// Read problems from this directory instead of the bundled set.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Only these problems (by name).
    pub names: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Relaxation level: 0, first, 1 or 2. `bench` accepts a comma list.
    #[arg(long)]
    pub level: Option<String>,
    /// Bernstein degree: one entry per variable, or a single uniform value.
    #[arg(long, value_delimiter = ',')]
    pub degree: Option<Vec<u32>>,
    /// Relative cutoff tolerance for branch-and-bound.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_boxes: Option<usize>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    #[arg(long, value_enum, default_value_t = ArithArg::Float)]
    pub arith: ArithArg,
    #[arg(long, value_enum, default_value_t = OutputArg::Text)]
    pub output: OutputArg,
    /// Worker threads. With 1, output is reproducible bit for bit.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Longest,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArithArg {
    Float,
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Text,
    Json,
}

impl From<ArithArg> for Arithmetic {
    fn from(a: ArithArg) -> Self {
        match a {
            ArithArg::Float => Arithmetic::Float,
            ArithArg::Rational => Arithmetic::Rational,
        }
    }
}

/// Rendered output plus the process exit code.
#[derive(Debug, Clone)]
pub struct Output {
    pub reports: Vec<Report>,
    pub text: String,
    pub code: i32,
}

/// Parses `args`, runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<Output> {
    let opts = match &cli.command {
        Command::Relax(a) | Command::Bnb(a) | Command::Lyapunov(a) => &a.opts,
        Command::Bench(b) => &b.opts,
    };
    if opts.jobs == 0 {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let reports = pool.install(|| match &cli.command {
        Command::Relax(a) => single(Mode::Relax, a, Level::Two),
        Command::Bnb(a) => single(Mode::Bnb, a, Level::Zero),
        Command::Lyapunov(a) => single(Mode::Lyapunov, a, Level::Zero),
        Command::Bench(b) => bench(b),
    })?;
    let code = if reports.iter().all(Report::converged) { 0 } else { 2 };
    let text = match opts.output {
        OutputArg::Json => report::to_json(&reports)? + "\n",
        OutputArg::Text => report::to_text(&reports),
    };
    Ok(Output { reports, text, code })
}

fn parse_levels(text: Option<&str>, default: Level) -> Result<Vec<Level>> {
    match text {
        None => Ok(vec![default]),
        Some(t) => t.split(',').map(|s| s.trim().parse()).collect(),
    }
}

fn single(mode: Mode, args: &RunArgs, default: Level) -> Result<Vec<Report>> {
    let levels = parse_levels(args.opts.level.as_deref(), default)?;
    let [level] = levels[..] else {
        return Err(Error::InvalidConfig("--level takes a single value here".into()));
    };
    let spec = ProblemSpec::load(&args.input)?;
    let name = problem_name(&spec, &args.input);
    Ok(vec![run_problem(mode, &name, &spec, level, &args.opts)?])
}

fn problem_name(spec: &ProblemSpec, path: &Path) -> String {
    spec.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "problem".into())
    })
}

fn bench(args: &BenchArgs) -> Result<Vec<Report>> {
    let levels = parse_levels(args.opts.level.as_deref(), Level::Zero)?;
    let mut entries: Vec<(String, ProblemSpec)> = match &args.fixtures {
        Some(dir) => load_fixture_dir(dir)?,
        None => benchmark_registry()
            .into_iter()
            .map(|b| (b.name.to_string(), b.spec))
            .collect(),
    };
    if !args.names.is_empty() {
        if let Some(missing) = args.names.iter().find(|n| !entries.iter().any(|(e, _)| e == *n)) {
            return Err(Error::InvalidConfig(format!("unknown benchmark {missing:?}")));
        }
        entries.retain(|(e, _)| args.names.contains(e));
    }
    let jobs: Vec<(&str, &ProblemSpec, Level)> = entries
        .iter()
        .flat_map(|(name, spec)| levels.iter().map(move |&l| (name.as_str(), spec, l)))
        .collect();
    jobs.par_iter()
        .map(|&(name, spec, level)| {
            let mode = if spec.lyapunov.is_some() { Mode::Lyapunov } else { Mode::Bnb };
            run_problem(mode, name, spec, level, &args.opts)
        })
        .collect()
}

fn run_problem(mode: Mode, name: &str, spec: &ProblemSpec, level: Level, opts: &Options) -> Result<Report> {
    match opts.arith {
        ArithArg::Float => run_typed::<f64>(mode, name, spec, level, opts),
        ArithArg::Rational => run_typed::<Rational>(mode, name, spec, level, opts),
    }
}

/// Expands a uniform `--degree` and checks it against what the problem needs.
fn resolve_degree<S: Scalar>(p: &Problem<S>, requested: Option<&[u32]>) -> Result<Option<Degree>> {
    let Some(req) = requested else {
        return Ok(p.degree.clone());
    };
    let n = p.objective.dim();
    let d = match req {
        [k] => MultiIndex::uniform(n, *k),
        many if many.len() == n => MultiIndex(many.to_vec()),
        many => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: many.len(),
            })
        }
    };
    let need = p
        .constraints
        .poly
        .iter()
        .fold(p.objective.support_degree(), |acc, g| acc.join(&g.support_degree()));
    if !need.le(&d) {
        return Err(Error::DegreeTooSmall {
            requested: d.0,
            required: need.0,
        });
    }
    Ok(Some(d))
}

fn run_typed<S: Scalar>(mode: Mode, name: &str, spec: &ProblemSpec, level: Level, opts: &Options) -> Result<Report> {
    let started = Instant::now();
    let arith = Arithmetic::from(opts.arith);
    let p: Problem<S> = spec.build()?;
    let degree = resolve_degree(&p, opts.degree.as_deref())?;
    let mut cfg = BnbConfig {
        level,
        degree: degree.clone(),
        ..BnbConfig::default()
    };
    if let Some(e) = opts.eps.or(p.epsilon) {
        cfg.epsilon = e;
    }
    if let Some(m) = opts.max_boxes {
        cfg.max_boxes = m;
    }
    if let Some(s) = opts.split {
        cfg.split = match s {
            SplitArg::Longest => SplitStrategy::LongestEdge,
            SplitArg::Zero => SplitStrategy::ZeroCentered,
        };
    }
    cfg.validate()?;
    match mode {
        Mode::Relax => {
            let delta = degree.unwrap_or_else(|| p.effective_degree());
            let chain = relaxation_chain(&p.objective, &p.constraints, &p.domain, &delta, level)?;
            let elapsed = started.elapsed().as_secs_f64();
            Ok(Report::relax(name, level, arith, &chain, &p.domain, elapsed))
        }
        Mode::Bnb => {
            let r = branch_and_bound(&p.objective, &p.constraints, &p.domain, &cfg)?;
            let elapsed = started.elapsed().as_secs_f64();
            Ok(Report::bnb(name, level, arith, &r, p.known_optimum, elapsed))
        }
        Mode::Lyapunov => {
            let case = LyapunovCase::from_problem(&p)?;
            let v = verify_lyapunov(&case, &cfg)?;
            let elapsed = started.elapsed().as_secs_f64();
            Ok(Report::lyapunov(name, level, arith, &v, case.expected_verdict, elapsed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("bernpop").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_parse() {
        let cli = parse(&["bnb", "--level", "first", "--degree", "4,6", "--eps", "1e-3", "--split", "zero", "p.json"]);
        let Command::Bnb(a) = cli.command else { panic!() };
        assert_eq!(a.opts.level.as_deref(), Some("first"));
        assert_eq!(a.opts.degree, Some(vec![4, 6]));
        assert_eq!(a.opts.split, Some(SplitArg::Zero));
        assert_eq!(a.opts.jobs, 1);
        assert_eq!(a.input, PathBuf::from("p.json"));
    }

    #[test]
    fn level_lists() {
        assert_eq!(parse_levels(Some("0,first,2"), Level::One).unwrap(), [Level::Zero, Level::FirstLp, Level::Two]);
        assert_eq!(parse_levels(None, Level::One).unwrap(), [Level::One]);
        assert!(parse_levels(Some("3"), Level::One).is_err());
    }

    #[test]
    fn uniform_degree_expands() {
        let spec = ProblemSpec::from_json(
            r#"{"dimension": 2, "objective": [{"exponents": [2, 1], "coeff": 1}],
                "box": {"lower": [-1, -1], "upper": [1, 1]}}"#,
        )
        .unwrap();
        let p: Problem<f64> = spec.build().unwrap();
        assert_eq!(resolve_degree(&p, Some(&[3])).unwrap(), Some(MultiIndex(vec![3, 3])));
        assert_eq!(resolve_degree(&p, None).unwrap(), None);
        assert!(matches!(resolve_degree(&p, Some(&[1])), Err(Error::DegreeTooSmall { .. })));
        assert!(matches!(resolve_degree(&p, Some(&[2, 2, 2])), Err(Error::DimensionMismatch { .. })));
    }
}
