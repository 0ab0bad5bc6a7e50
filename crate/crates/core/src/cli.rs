//! Command-line front end: `solve`, `verify`, `simulate` and `sweep`.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 solver divergence,
//! 4 verification beyond tolerance. Data goes to `--output` or stdout;
//! diagnostics go to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equal::EquilibriumSolution;
use crate::error::{Error, Result};
use crate::general::{IterationMode, SolverDiagnostics, DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::model::{ConflictRatios, ParamsFile};
use crate::oracle::{self, StrategyTable, TableRow, DEFAULT_GRID};
use crate::simulate::{self, SolutionSource};
use crate::strategy::{Method, StrategyPair};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Environment variable capping worker threads (0 = automatic).
pub const THREADS_ENV: &str = "APC_THREADS";

/// Resource levels at which `verify` compares strategies with best responses.
pub const VERIFY_POINTS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Parser)]
#[command(name = "apc", version, about = "All-pay-auction conflict solver and simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the strategy pair and tabulate it
    Solve(RunArgs),
    /// Check a solution against the numerical oracles
    Verify(RunArgs),
    /// Monte-Carlo simulate conflicts under the solved strategies
    Simulate(RunArgs),
    /// Solve and simulate across a range of one parameter
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Step tolerance for `--method converge`
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long = "grid", default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long = "n", default_value_t = 100_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// param:from:to:steps, param one of lambda, beta, alpha, epsilon
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file with raw country parameters or lambda/beta ratios
    #[arg(long)]
    pub params_file: Option<PathBuf>,
    /// Per-draw CSV trace for `simulate`
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum MethodArg {
    Equal,
    Order0,
    Order1,
    Order2,
    Converge,
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommandKind {
    Solve,
    Verify,
    Simulate,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda,
    Beta,
    Alpha,
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || Error::Config(format!("sweep must look like param:from:to:steps, got {spec:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let param = match parts[0] {
            "lambda" => SweepParam::Lambda,
            "beta" => SweepParam::Beta,
            "alpha" => SweepParam::Alpha,
            "epsilon" => SweepParam::Epsilon,
            other => return Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
        };
        let from: f64 = parts[1].parse().map_err(|_| bad())?;
        let to: f64 = parts[2].parse().map_err(|_| bad())?;
        let steps: usize = parts[3].parse().map_err(|_| bad())?;
        if steps < 2 {
            return Err(Error::Config("sweep needs at least 2 steps".into()));
        }
        if !(from.is_finite() && to.is_finite()) {
            return Err(bad());
        }
        Ok(Self { param, from, to, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == n {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: ConflictRatios,
    /// `None` picks the closed form on the diagonal and the second-order
    /// iterate elsewhere.
    pub method: Option<Method>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub grid_size: usize,
    pub n: u64,
    pub seed: u64,
    pub sweep: Option<SweepAxis>,
    pub trace: Option<PathBuf>,
    pub threads: usize,
}

/// Raw ratio inputs before validation; sweeps substitute into these.
#[derive(Debug, Clone, Copy)]
struct RawRatios {
    lambda: f64,
    beta: f64,
    alpha: f64,
    epsilon: Option<f64>,
}

impl RawRatios {
    fn build(self) -> Result<ConflictRatios> {
        let eps = self.epsilon.unwrap_or(if self.lambda == self.beta { 0.0 } else { DEFAULT_EPSILON });
        ConflictRatios::new(self.lambda, self.beta, self.alpha, eps)
    }

    fn with(mut self, param: SweepParam, v: f64) -> Self {
        match param {
            SweepParam::Lambda => self.lambda = v,
            SweepParam::Beta => self.beta = v,
            SweepParam::Alpha => self.alpha = v,
            SweepParam::Epsilon => self.epsilon = Some(v),
        }
        self
    }
}

fn resolve_raw(args: &RunArgs) -> Result<RawRatios> {
    let file = match &args.params_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(ParamsFile::from_json(&text).map_err(|e| Error::Config(e.to_string()))?)
        }
        None => None,
    };
    let alpha = args
        .alpha
        .or(file.as_ref().and_then(|f| f.alpha))
        .ok_or_else(|| Error::Config("--alpha is required".into()))?;
    let epsilon = args.epsilon.or(file.as_ref().and_then(|f| f.epsilon));
    let (lambda, beta) = match (args.lambda, args.beta) {
        (Some(l), Some(b)) => (l, b),
        (l, b) => {
            let f = file
                .as_ref()
                .ok_or_else(|| Error::Config("give --lambda and --beta, or --params-file".into()))?;
            let (fl, fb) = f.ratio_pair()?;
            // A lone ratio flag still overrides the file.
            (l.unwrap_or(fl), b.unwrap_or(fb))
        }
    };
    Ok(RawRatios { lambda, beta, alpha, epsilon })
}

fn method_of(arg: MethodArg, tol: f64, max_iter: usize) -> Method {
    match arg {
        MethodArg::Equal => Method::Equal,
        MethodArg::Order0 => Method::Iterate(IterationMode::Order0),
        MethodArg::Order1 => Method::Iterate(IterationMode::Order1),
        MethodArg::Order2 => Method::Iterate(IterationMode::Order2),
        MethodArg::Converge => Method::Iterate(IterationMode::Converge { tol, max_iter }),
        MethodArg::Root => Method::Root,
    }
}

fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a nonnegative integer, got {v:?}"))),
        _ => Ok(0),
    }
}

impl RunConfig {
    pub fn from_args(command: CommandKind, args: &RunArgs) -> Result<Self> {
        let raw = resolve_raw(args)?;
        let params = raw.build()?;
        if args.grid < 2 {
            return Err(Error::Config(format!("--grid must be at least 2, got {}", args.grid)));
        }
        if args.n == 0 {
            return Err(Error::Config("--n must be positive".into()));
        }
        if !(args.tol > 0.0) || args.max_iter == 0 {
            return Err(Error::Config("--tol must be positive and --max-iter nonzero".into()));
        }
        let sweep = match (&args.sweep, command) {
            (Some(s), CommandKind::Sweep) => Some(SweepAxis::parse(s)?),
            (None, CommandKind::Sweep) => return Err(Error::Config("sweep needs --sweep".into())),
            (Some(_), _) => return Err(Error::Config("--sweep only applies to the sweep command".into())),
            (None, _) => None,
        };
        let format = match (command, args.format) {
            (CommandKind::Solve | CommandKind::Sweep, f) => f.unwrap_or(Format::Csv),
            (_, None | Some(Format::Json)) => Format::Json,
            (_, Some(Format::Csv)) => {
                return Err(Error::Config("verify and simulate emit JSON only".into()))
            }
        };
        Ok(Self {
            command,
            params,
            method: args.method.map(|m| method_of(m, args.tol, args.max_iter)),
            output: args.output.clone(),
            format,
            grid_size: args.grid,
            n: args.n,
            seed: args.seed,
            sweep,
            trace: args.trace.clone(),
            threads: threads_from_env()?,
        })
    }

    fn method_for(&self, params: &ConflictRatios) -> Method {
        self.method.unwrap_or_else(|| Method::default_for(params))
    }
}

/// Maps an error to the process exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } | Error::NoBracket(_) => EXIT_DIVERGENCE,
        Error::Verification(_) | Error::Table(_) => EXIT_VERIFICATION,
        _ => EXIT_CONFIG,
    }
}

/// Solution block of the `solve` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub params: ConflictRatios,
    pub solution: EquilibriumSolution,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SolveDocument {
    #[serde(flatten)]
    report: SolveReport,
    table: Vec<TableRow>,
}

/// One row of a sweep; solver fields are empty when the point failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub k0: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub residual_bc_left1: Option<f64>,
    pub residual_bc_left2: Option<f64>,
    pub residual_bc_right: Option<f64>,
    pub fixed_point_residual: Option<f64>,
    pub converged: Option<bool>,
    pub win_prob_1: Option<f64>,
    pub status: String,
}

fn open_output<'a>(cfg: &RunConfig, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            Error::Config(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(stdout),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn source_for(method: Method) -> SolutionSource {
    match method {
        Method::Equal => SolutionSource::EqualClosedForm,
        _ => SolutionSource::GeneralIterated,
    }
}

/// Executes `cfg`, writing data to `--output` or `stdout` and diagnostics to `stderr`.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cfg.command {
        CommandKind::Solve => {
            let (pair, diagnostics) = StrategyPair::solve(cfg.params, cfg.method_for(&cfg.params))?;
            let table = StrategyTable::sample(&pair, cfg.grid_size)?;
            let report = SolveReport {
                params: pair.ratios,
                solution: pair.solution,
                diagnostics,
            };
            let mut out = open_output(cfg, stdout)?;
            match cfg.format {
                Format::Csv => {
                    table.write_csv(&mut out)?;
                    serde_json::to_writer(&mut *stderr, &report)?;
                    writeln!(stderr)?;
                }
                Format::Json => write_json(
                    &mut out,
                    &SolveDocument {
                        report,
                        table: table.grid,
                    },
                )?,
            }
        }
        CommandKind::Verify => {
            let (pair, _) = StrategyPair::solve(cfg.params, cfg.method_for(&cfg.params))?;
            let report = oracle::verify(&pair, cfg.grid_size, &VERIFY_POINTS)?;
            write_json(&mut open_output(cfg, stdout)?, &report)?;
            if !report.passed {
                return Err(Error::Verification(format!(
                    "best-response gap {:.3e} (tol {:.0e}), ODE residuals {:.3e}/{:.3e} (tol {:.0e})",
                    report.best_response_max_gap,
                    report.best_response_tol,
                    report.ode_residual_1,
                    report.ode_residual_2,
                    report.ode_tol
                )));
            }
        }
        CommandKind::Simulate => {
            let source = source_for(cfg.method_for(&cfg.params));
            let summary = simulate::simulate_with_threads(cfg.params, source, cfg.n, cfg.seed, cfg.threads)?;
            if let Some(path) = &cfg.trace {
                let file = File::create(path)
                    .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
                simulate::write_trace(cfg.params, source, cfg.n, cfg.seed, BufWriter::new(file))?;
            }
            write_json(&mut open_output(cfg, stdout)?, &summary)?;
        }
        CommandKind::Sweep => {
            let rows = sweep(cfg)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            if failed > 0 {
                writeln!(stderr, "{failed} of {} sweep points failed", rows.len())?;
            }
            let mut out = open_output(cfg, stdout)?;
            match cfg.format {
                Format::Json => write_json(&mut out, &rows)?,
                Format::Csv => {
                    let mut w = csv::WriterBuilder::new()
                        .terminator(csv::Terminator::Any(b'\n'))
                        .from_writer(&mut out);
                    for row in &rows {
                        w.serialize(row)?;
                    }
                    w.flush()?;
                }
            }
        }
    }
    Ok(())
}

/// Solves and simulates every point of the sweep axis in parallel.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let axis = cfg
        .sweep
        .ok_or_else(|| Error::Config("sweep needs --sweep".into()))?;
    let p = cfg.params;
    // Back to the caller's labeling so the swept value means what was typed.
    let base = RawRatios {
        lambda: if p.swapped { 1.0 / p.lambda } else { p.lambda },
        beta: if p.swapped { 1.0 / p.beta } else { p.beta },
        alpha: p.alpha,
        epsilon: Some(p.epsilon),
    };
    let base = if matches!(axis.param, SweepParam::Lambda | SweepParam::Beta) && cfg.method.is_none() {
        // Leaving the diagonal needs a positive cutoff.
        RawRatios {
            epsilon: Some(if p.epsilon > 0.0 { p.epsilon } else { DEFAULT_EPSILON }),
            ..base
        }
    } else {
        base
    };
    let point = |v: f64| -> SweepRow {
        let mut row = SweepRow {
            value: v,
            lambda: None,
            beta: None,
            alpha: None,
            epsilon: None,
            k0: None,
            k1: None,
            k2: None,
            residual_bc_left1: None,
            residual_bc_left2: None,
            residual_bc_right: None,
            fixed_point_residual: None,
            converged: None,
            win_prob_1: None,
            status: String::from("ok"),
        };
        let result = (|| -> Result<()> {
            let params = base.with(axis.param, v).build()?;
            row.lambda = Some(params.lambda);
            row.beta = Some(params.beta);
            row.alpha = Some(params.alpha);
            row.epsilon = Some(params.epsilon);
            let method = cfg.method_for(&params);
            let (pair, diag) = StrategyPair::solve(params, method)?;
            row.k0 = Some(pair.solution.k0);
            row.k1 = Some(pair.solution.k1);
            row.k2 = Some(pair.solution.k2);
            row.residual_bc_left1 = Some(diag.residual_bc_left1);
            row.residual_bc_left2 = Some(diag.residual_bc_left2);
            row.residual_bc_right = Some(diag.residual_bc_right);
            row.fixed_point_residual = Some(diag.fixed_point_residual);
            row.converged = Some(diag.converged);
            let summary = simulate::simulate_with_threads(params, source_for(method), cfg.n, cfg.seed, 1)?;
            row.win_prob_1 = Some(summary.win_prob_1);
            Ok(())
        })();
        if let Err(e) = result {
            row.status = e.to_string();
        }
        row
    };
    let values = axis.values();
    let run = || values.par_iter().map(|&v| point(v)).collect::<Vec<_>>();
    if cfg.threads == 0 {
        Ok(run())
    } else {
        Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run))
    }
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, args) = match cli.command {
        Command::Solve(a) => (CommandKind::Solve, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut err = stderr.lock();
    let result = RunConfig::from_args(kind, &args).and_then(|cfg| run(&cfg, &mut stdout.lock(), &mut err));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
