//! Command-line driver. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use cem_core::cem::{run_method, CemConfig, Method, ScheduleSpec};
use cem_core::distributions::MultivariateGaussian;
use cem_core::sierra::{SierraFunction, SierraParams};
use cem_core::RngStream;
use clap::{Args, Parser, Subcommand};

use crate::bench::{run_experiment, summarize, ExperimentId, ExperimentSpec, StdClock, DEFAULT_SEEDS};
use crate::io::{write_csv, write_experiment, write_trace, GridRow, RunDocument, GRID_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cem", version, about = "Cross-entropy optimizers on the sierra test function")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One optimizer run; prints the best value and point, optionally writes the trace.
    Run(RunArgs),
    /// Reproduce a built-in experiment over many seeds.
    Experiment(ExperimentArgs),
    /// Export the sierra surface on a grid.
    Sierra(SierraArgs),
}

#[derive(Debug, Args)]
pub struct SierraFlags {
    /// Spread rate η.
    #[arg(long, default_value_t = 6.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma: f64,
    /// Cluster distance δ.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub decay: u8,
}

impl SierraFlags {
    fn params(&self, center: [f64; 2]) -> SierraParams {
        SierraParams {
            center,
            sigma: self.sigma,
            cluster_distance: self.delta,
            spread_rate: self.eta,
            decay: self.decay == 1,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "ce")]
    pub method: Method,
    /// Initial mean as `a,b`.
    #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
    pub mu: [f64; 2],
    /// Initial covariance is `c·I`.
    #[arg(long, default_value_t = 200.0)]
    pub cov_scale: f64,
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub m_elite: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// `uniform`, `geom:<p>` or `geom-literal:<p>`.
    #[arg(long, default_value = "uniform")]
    pub schedule: ScheduleSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sierra: SierraFlags,
    /// Trace JSON destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// `1a`, `1b`, `1c` or `2`.
    #[arg(long, value_parser = parse_id)]
    pub id: ExperimentId,
    #[arg(long, default_value_t = DEFAULT_SEEDS, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SierraArgs {
    #[command(flatten)]
    pub sierra: SierraFlags,
    /// Sierra center μ̃ as `a,b`.
    #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
    pub mu: [f64; 2],
    #[arg(long, value_parser = parse_pair, default_value = "-15,-15", allow_hyphen_values = true)]
    pub lo: [f64; 2],
    #[arg(long, value_parser = parse_pair, default_value = "15,15", allow_hyphen_values = true)]
    pub hi: [f64; 2],
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    pub step: f64,
    /// Grid CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected two comma-separated numbers, got {s:?}"));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let pair = [num(a)?, num(b)?];
    if pair.iter().all(|v| v.is_finite()) {
        Ok(pair)
    } else {
        Err(format!("non-finite value in {s:?}"))
    }
}

fn parse_id(s: &str) -> Result<ExperimentId, String> {
    match s.parse::<ExperimentId>() {
        Ok(ExperimentId::Custom) | Err(_) => Err(format!("unknown experiment id {s:?} (expected 1a, 1b, 1c or 2)")),
        Ok(id) => Ok(id),
    }
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, &mut stdout.lock()),
        Command::Experiment(a) => cmd_experiment(&a, &mut stdout.lock()),
        Command::Sierra(a) => cmd_sierra(&a, &mut stdout.lock()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}\n\nSee `cem --help` for usage."),
                CliError::Runtime(msg) => eprintln!("error: {msg}"),
            }
            e.code()
        }
    }
}

pub fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = CemConfig::new(a.m, a.m_elite, a.k_max).with_schedule(a.schedule);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !(a.cov_scale > 0.0 && a.cov_scale.is_finite()) {
        return Err(CliError::Usage(format!("--cov-scale must be positive, got {}", a.cov_scale)));
    }
    let params = a.sierra.params(SierraParams::default().center);
    let objective = SierraFunction::build(params).map_err(|e| CliError::Usage(e.to_string()))?;
    let initial = MultivariateGaussian::isotropic(a.mu.to_vec(), a.cov_scale).map_err(runtime)?;

    let trace = run_method(a.method, &objective, initial.into(), &cfg, &mut RngStream::new(a.seed), &StdClock::start())
        .map_err(runtime)?;

    if let Some(path) = &a.out {
        let doc = RunDocument {
            experiment: "custom",
            method: a.method,
            schedule: a.schedule,
            seed: a.seed,
            objective: params,
            trace: &trace,
        };
        let file = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        write_trace(file, &doc).map_err(runtime)?;
    }
    let bv = trace.best_value().map_or("none".to_string(), |v| v.to_string());
    let bx = trace.best_point().map_or("none".to_string(), |p| format!("{p:?}"));
    writeln!(out, "b_v {bv}\nb_x {bx}\nevaluations {}", trace.evaluations()).map_err(runtime)
}

pub fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = ExperimentSpec::builtin(a.id).with_seed_count(a.seeds);
    if let Some(k) = a.k_max {
        spec = spec.with_k_max(k);
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let result = run_experiment(&spec).map_err(runtime)?;
    let rows = summarize(&result);
    write_experiment(&a.out, &result, &rows).map_err(|e| runtime(format!("{}: {e}", a.out.display())))?;

    writeln!(out, "{:<12} {:<16} {:>10} {:>10} {:>8}", "method", "schedule", "runtime_s", "bv", "bd")
        .map_err(runtime)?;
    for (row, agg) in rows.iter().zip(&result.aggregates) {
        let flag = if agg.valid { "" } else { "  (invalid: too many failed runs)" };
        writeln!(
            out,
            "{:<12} {:<16} {:>10.4} {:>10.4} {:>8.2}{flag}",
            row.method, row.schedule, row.runtime_s, row.bv, row.bd
        )
        .map_err(runtime)?;
    }
    if !result.failures.is_empty() {
        writeln!(out, "{} run(s) failed", result.failures.len()).map_err(runtime)?;
    }
    Ok(())
}

pub fn cmd_sierra(a: &SierraArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(a.step > 0.0 && a.step.is_finite()) {
        return Err(CliError::Usage(format!("--step must be positive, got {}", a.step)));
    }
    if a.lo.iter().zip(&a.hi).any(|(l, h)| l > h) {
        return Err(CliError::Usage("--lo must not exceed --hi".into()));
    }
    let f = SierraFunction::build(a.sierra.params(a.mu)).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<GridRow> = f.grid(a.lo, a.hi, a.step).map_err(runtime)?.into_iter().map(GridRow::from).collect();
    match &a.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            write_csv(io::BufWriter::new(file), &GRID_HEADER, &rows).map_err(runtime)
        }
        None => write_csv(out, &GRID_HEADER, &rows).map_err(runtime),
    }
}
