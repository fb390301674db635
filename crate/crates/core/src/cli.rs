//! Benchmark harness behind the `efg-smooth` binary: run one solver and
//! stream its exploitability trace to CSV, or tabulate existing traces.

use std::cell::RefCell;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use log::info;
use thiserror::Error;

use crate::bspp::SaddlePointProblem;
use crate::cfr::{cfr_plus_solve, cfr_solve};
use crate::egt::{egt_solve_heuristic, solve_with_centering, WarmStart};
use crate::error::{GameError, SolveError};
use crate::games::{build_kuhn, build_leduc, sequence_form};
use crate::trace::{SolveOptions, SolveTrace, TraceRecord};

pub const CSV_HEADER: [&str; 7] = ["iteration", "epsilon", "mu1", "mu2", "tau", "phase", "elapsed_ms"];
pub const THRESHOLDS: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const DEFAULT_WARM_FRACTION: f64 = 0.1;
pub const COST_NOTE: &str =
    "note: EGT-based methods cost roughly 2-3x a CFR iteration; scale iteration counts accordingly for wall-time comparisons.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Game {
    Kuhn,
    Leduc3,
    Leduc13,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cfr,
    #[value(name = "cfr_plus")]
    CfrPlus,
    Egt,
    #[value(name = "egt_centering")]
    EgtCentering,
    #[value(name = "egt_centering_cfr_plus")]
    EgtCenteringCfrPlus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub game: Game,
    pub method: Method,
    pub iterations: usize,
    pub warm_fraction: f64,
    pub eval_stride: usize,
    /// Accepted for interface stability; every solver is deterministic.
    pub seed: u64,
    /// `None` writes to standard output.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("solver failed: {0}")]
    Solve(#[from] SolveError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("{path}:{line}: {message}")]
    MalformedCsv {
        path: String,
        line: u64,
        message: String,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Game(_) | CliError::MalformedCsv { .. } => 2,
            CliError::Solve(
                SolveError::TauUnderflow { .. }
                | SolveError::InitFailed { .. }
                | SolveError::GapViolated { .. }
                | SolveError::NegativeExploitability(_),
            ) => 3,
            CliError::Solve(_) => 2,
            CliError::Io(_) => 4,
        }
    }
}

fn from_csv(err: csv::Error) -> CliError {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => CliError::Io(e),
        other => CliError::Io(io::Error::other(format!("{other:?}"))),
    }
}

pub fn build_problem(game: Game) -> Result<SaddlePointProblem, GameError> {
    let tree = match game {
        Game::Kuhn => build_kuhn(),
        Game::Leduc3 => build_leduc(3)?,
        Game::Leduc13 => build_leduc(13)?,
    };
    Ok(sequence_form(&tree)?.problem)
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    if config.iterations == 0 {
        return Err(CliError::Config("iterations must be at least 1".into()));
    }
    if config.eval_stride == 0 {
        return Err(CliError::Config("eval stride must be at least 1".into()));
    }
    if !(config.warm_fraction > 0.0 && config.warm_fraction < 1.0) {
        return Err(CliError::Config(format!(
            "warm fraction {} outside (0, 1)",
            config.warm_fraction
        )));
    }
    Ok(())
}

pub fn csv_row(record: &TraceRecord) -> [String; 7] {
    let (mu1, mu2, tau) = match record.smoothing {
        Some(s) => (s.mu1.to_string(), s.mu2.to_string(), s.tau.to_string()),
        None => Default::default(),
    };
    [
        record.iteration.to_string(),
        record.epsilon.to_string(),
        mu1,
        mu2,
        tau,
        record.phase.to_string(),
        format!("{:.3}", record.elapsed_ms),
    ]
}

/// Runs an already-built problem, streaming rows to `sink`.
pub fn run_problem<W: Write>(
    problem: &SaddlePointProblem,
    config: &RunConfig,
    sink: W,
) -> Result<SolveTrace, CliError> {
    validate(config)?;
    let writer = RefCell::new(csv::Writer::from_writer(sink));
    writer.borrow_mut().write_record(CSV_HEADER).map_err(from_csv)?;
    let failure: RefCell<Option<CliError>> = RefCell::new(None);
    let mut callback = |record: &TraceRecord| {
        if failure.borrow().is_some() {
            return;
        }
        let mut w = writer.borrow_mut();
        let result = w
            .write_record(csv_row(record))
            .map_err(from_csv)
            .and_then(|_| w.flush().map_err(CliError::Io));
        if let Err(e) = result {
            *failure.borrow_mut() = Some(e);
        }
    };
    let options = SolveOptions {
        eval_stride: config.eval_stride,
    };
    let (t, wf) = (config.iterations, config.warm_fraction);
    let solution = match config.method {
        Method::Cfr => cfr_solve(problem, t, &options, &mut callback),
        Method::CfrPlus => cfr_plus_solve(problem, t, &options, &mut callback),
        Method::Egt => egt_solve_heuristic(problem, t, &options, &mut callback),
        Method::EgtCentering => solve_with_centering(problem, t, WarmStart::Egt, wf, &options, &mut callback),
        Method::EgtCenteringCfrPlus => {
            solve_with_centering(problem, t, WarmStart::CfrPlus, wf, &options, &mut callback)
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let solution = solution.map_err(|e| match e {
        SolveError::InvalidWarmFraction(_) | SolveError::EmptyPhase { .. } | SolveError::NoIterations => {
            CliError::Config(e.to_string())
        }
        other => CliError::Solve(other),
    })?;
    writer.into_inner().flush()?;
    if let Some(eps) = solution.trace.final_epsilon() {
        info!(
            "{:?}/{:?}: final epsilon {eps:e} after {} iterations, value {:.6}",
            config.game,
            config.method,
            config.iterations,
            problem.objective(&solution.x, &solution.y)
        );
    }
    Ok(solution.trace)
}

/// Builds the configured game and runs the configured method.
pub fn run(config: &RunConfig) -> Result<SolveTrace, CliError> {
    validate(config)?;
    let problem = build_problem(config.game)?;
    info!(
        "{:?}: {} x {} sequences, {} nonzeros",
        config.game,
        problem.tx().num_sequences(),
        problem.ty().num_sequences(),
        problem.matrix().nnz()
    );
    match &config.output {
        Some(path) => run_problem(&problem, config, io::BufWriter::new(File::create(path)?)),
        None => run_problem(&problem, config, io::stdout().lock()),
    }
}

/// Final exploitability and first iteration at or below each threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSummary {
    pub label: String,
    pub final_epsilon: Option<f64>,
    pub reached: [Option<usize>; 3],
}

pub fn summarize_file(path: &Path) -> Result<TraceSummary, CliError> {
    let display = path.display().to_string();
    let malformed = |line: u64, message: String| CliError::MalformedCsv {
        path: display.clone(),
        line,
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(from_csv)?;
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(1, format!("missing `{name}` column")))
    };
    let (it_col, eps_col) = (column("iteration")?, column("epsilon")?);
    let mut summary = TraceSummary {
        label: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or(display.clone()),
        final_epsilon: None,
        reached: [None; 3],
    };
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: usize| row.get(col).ok_or_else(|| malformed(line, "short row".into()));
        let iteration: usize = field(it_col)?
            .parse()
            .map_err(|e| malformed(line, format!("bad iteration: {e}")))?;
        let eps: f64 = field(eps_col)?
            .parse()
            .map_err(|e| malformed(line, format!("bad epsilon: {e}")))?;
        for (slot, &threshold) in summary.reached.iter_mut().zip(&THRESHOLDS) {
            if slot.is_none() && eps <= threshold {
                *slot = Some(iteration);
            }
        }
        summary.final_epsilon = Some(eps);
    }
    Ok(summary)
}

/// Writes a table with one line per trace file.
pub fn summarize<W: Write>(paths: &[PathBuf], out: &mut W) -> Result<(), CliError> {
    let summaries = paths
        .iter()
        .map(|p| summarize_file(p))
        .collect::<Result<Vec<_>, _>>()?;
    let width = summaries.iter().map(|s| s.label.chars().count()).max().unwrap_or(3).max(3);
    writeln!(
        out,
        "{:<width$}  {:>12}  {:>10}  {:>10}  {:>10}",
        "run", "final_eps", "to_1e-2", "to_1e-3", "to_1e-4"
    )?;
    let fmt_iter = |v: Option<usize>| v.map_or_else(|| "\u{2014}".to_string(), |k| k.to_string());
    for s in &summaries {
        let eps = s.final_epsilon.map_or_else(|| "\u{2014}".to_string(), |e| format!("{e:.4e}"));
        writeln!(
            out,
            "{:<width$}  {:>12}  {:>10}  {:>10}  {:>10}",
            s.label,
            eps,
            fmt_iter(s.reached[0]),
            fmt_iter(s.reached[1]),
            fmt_iter(s.reached[2])
        )?;
    }
    if !summaries.is_empty() {
        writeln!(out, "{COST_NOTE}")?;
    }
    Ok(())
}
