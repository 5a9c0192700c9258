//! Seeded multi-run experiments on the sierra objective.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use cem_core::cem::{run_method, CemConfig, Clock, Method, OptimizationTrace, ScheduleSpec};
use cem_core::distributions::MultivariateGaussian;
use cem_core::linalg::Matrix;
use cem_core::sierra::{SierraFunction, SierraParams};
use cem_core::{Error, Result, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default seed count; seeds are `0..DEFAULT_SEEDS`.
pub const DEFAULT_SEEDS: u64 = 50;
/// An aggregate is invalid once more than this fraction of its runs failed.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ExperimentId {
    #[serde(rename = "1A")]
    OneA,
    #[serde(rename = "1B")]
    OneB,
    #[serde(rename = "1C")]
    OneC,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "custom")]
    Custom,
}

impl ExperimentId {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentId::OneA => "1A",
            ExperimentId::OneB => "1B",
            ExperimentId::OneC => "1C",
            ExperimentId::Two => "2",
            ExperimentId::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1a" => Ok(ExperimentId::OneA),
            "1b" => Ok(ExperimentId::OneB),
            "1c" => Ok(ExperimentId::OneC),
            "2" => Ok(ExperimentId::Two),
            "custom" => Ok(ExperimentId::Custom),
            _ => Err(Error::InvalidConfig(format!("unknown experiment id {s:?}"))),
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub objective: SierraParams,
    pub initial_mean: [f64; 2],
    pub initial_covariance: Matrix,
    pub cfg: CemConfig,
    pub methods: Vec<Method>,
    pub schedules: Vec<ScheduleSpec>,
    pub seeds: Vec<u64>,
}

impl ExperimentSpec {
    /// The built-in setups. `Custom` starts from the 1A values.
    pub fn builtin(id: ExperimentId) -> Self {
        let mut spec = ExperimentSpec {
            id,
            objective: SierraParams::default(),
            initial_mean: [0.0, 0.0],
            initial_covariance: Matrix::identity(2).scaled(200.0),
            cfg: CemConfig::new(10, 5, 10),
            methods: Method::ALL.to_vec(),
            schedules: vec![ScheduleSpec::Uniform],
            seeds: (0..DEFAULT_SEEDS).collect(),
        };
        match id {
            ExperimentId::OneA | ExperimentId::Custom => {}
            ExperimentId::OneB => {
                spec.initial_mean = [-50.0, -50.0];
                spec.initial_covariance = Matrix::identity(2).scaled(2000.0);
            }
            ExperimentId::OneC => spec.cfg = CemConfig::new(5, 3, 10),
            ExperimentId::Two => {
                spec = ExperimentSpec { id, ..ExperimentSpec::builtin(ExperimentId::OneB) };
                spec.methods = vec![Method::CeSurrogate];
                spec.schedules = vec![
                    ScheduleSpec::Uniform,
                    ScheduleSpec::GeometricBudgeted { p: 0.1 },
                    ScheduleSpec::GeometricBudgeted { p: 0.2 },
                    ScheduleSpec::GeometricBudgeted { p: 0.3 },
                ];
            }
        }
        spec
    }

    pub fn with_seed_count(mut self, n: u64) -> Self {
        self.seeds = (0..n).collect();
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.cfg.k_max = k_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("experiment needs at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("experiment seeds must be distinct".into()));
        }
        for s in &self.schedules {
            s.validate()?;
        }
        self.objective.validate()?;
        self.cfg.validate()?;
        self.initial_distribution().map(|_| ())
    }

    pub fn initial_distribution(&self) -> Result<MultivariateGaussian> {
        MultivariateGaussian::new(self.initial_mean.to_vec(), self.initial_covariance.clone())
    }
}

/// Wall-clock seconds since construction.
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        StdClock(Instant::now())
    }
}

impl Clock for StdClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// One successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: Method,
    pub schedule: ScheduleSpec,
    pub seed: u64,
    pub runtime_s: f64,
    /// Best-so-far true value after each iteration; NaN before the first evaluation.
    pub best_values: Vec<f64>,
    /// Distance from the best-so-far point to the optimum after each iteration.
    pub best_distances: Vec<f64>,
    pub trace: OptimizationTrace,
}

impl RunRecord {
    pub fn final_value(&self) -> f64 {
        self.best_values.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_distance(&self) -> f64 {
        self.best_distances.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub method: Method,
    pub schedule: ScheduleSpec,
    pub seed: u64,
    pub message: String,
}

/// Seed-averaged metrics at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationAggregate {
    pub iteration: usize,
    pub bv_mean: f64,
    /// Population standard deviation over seeds.
    pub bv_std: f64,
    pub bd_mean: f64,
}

/// Metrics for one (method, schedule) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub schedule: ScheduleSpec,
    pub runs: usize,
    pub failures: usize,
    pub valid: bool,
    pub curve: Vec<IterationAggregate>,
    pub runtime_mean: f64,
}

impl Aggregate {
    pub fn final_metrics(&self) -> Option<&IterationAggregate> {
        self.curve.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// Successful runs, in (method, schedule, seed) order.
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub aggregates: Vec<Aggregate>,
}

/// One Table-I-style row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub method: String,
    pub schedule: String,
    pub runtime_s: f64,
    pub bv: f64,
    pub bd: f64,
}

/// Runs every (method, schedule, seed) triple in parallel, then reduces in
/// a fixed order so results do not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let objective = SierraFunction::build(spec.objective)?;
    let initial = spec.initial_distribution()?;
    let optimum = objective.optimum();

    let jobs: Vec<(Method, ScheduleSpec, u64)> = spec
        .methods
        .iter()
        .flat_map(|&m| spec.schedules.iter().flat_map(move |&s| spec.seeds.iter().map(move |&seed| (m, s, seed))))
        .collect();

    let outcomes: Vec<std::result::Result<RunRecord, RunFailure>> = jobs
        .par_iter()
        .map(|&(method, schedule, seed)| {
            let objective = objective.clone();
            let cfg = spec.cfg.clone().with_schedule(schedule);
            let clock = StdClock::start();
            let run = run_method(method, &objective, initial.clone().into(), &cfg, &mut RngStream::new(seed), &clock);
            let runtime_s = clock.now();
            match run {
                Ok(trace) => Ok(record(method, schedule, seed, runtime_s, trace, optimum)),
                Err(e) => Err(RunFailure { method, schedule, seed, message: e.to_string() }),
            }
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(f) => failures.push(f),
        }
    }

    let mut aggregates = Vec::new();
    for &method in &spec.methods {
        for &schedule in &spec.schedules {
            let group: Vec<&RunRecord> = runs.iter().filter(|r| r.method == method && r.schedule == schedule).collect();
            let failed = failures.iter().filter(|f| f.method == method && f.schedule == schedule).count();
            aggregates.push(aggregate(method, schedule, &group, failed, spec.cfg.k_max));
        }
    }
    Ok(ExperimentResult { spec: spec.clone(), runs, failures, aggregates })
}

/// CE-surrogate on the 1B setup under the uniform and geometric schedules.
pub fn experiment_2(base: &ExperimentSpec) -> Result<ExperimentResult> {
    let two = ExperimentSpec::builtin(ExperimentId::Two);
    let spec = ExperimentSpec { id: ExperimentId::Two, methods: two.methods, schedules: two.schedules, ..base.clone() };
    run_experiment(&spec)
}

/// One row per (method, schedule), from the final iteration.
pub fn summarize(result: &ExperimentResult) -> Vec<SummaryRow> {
    result
        .aggregates
        .iter()
        .map(|a| {
            let last = a.final_metrics();
            SummaryRow {
                experiment: result.spec.id.to_string(),
                method: a.method.to_string(),
                schedule: a.schedule.to_string(),
                runtime_s: a.runtime_mean,
                bv: last.map_or(f64::NAN, |l| l.bv_mean),
                bd: last.map_or(f64::NAN, |l| l.bd_mean),
            }
        })
        .collect()
}

fn record(
    method: Method,
    schedule: ScheduleSpec,
    seed: u64,
    runtime_s: f64,
    trace: OptimizationTrace,
    optimum: [f64; 2],
) -> RunRecord {
    let distance = |p: &[f64]| p.iter().zip(optimum).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let best_values = trace.iterations.iter().map(|r| r.best_value.unwrap_or(f64::NAN)).collect();
    let best_distances = trace.iterations.iter().map(|r| r.best_point.as_deref().map_or(f64::NAN, distance)).collect();
    RunRecord { method, schedule, seed, runtime_s, best_values, best_distances, trace }
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, n) = xs.fold((0.0, 0), |(s, n), x| (s + x, n + 1));
    (if n == 0 { f64::NAN } else { sum / n as f64 }, n)
}

fn aggregate(method: Method, schedule: ScheduleSpec, group: &[&RunRecord], failures: usize, k_max: usize) -> Aggregate {
    let total = group.len() + failures;
    let valid = !group.is_empty() && failures as f64 <= MAX_FAILURE_FRACTION * total as f64;
    let curve = (0..k_max)
        .map(|k| {
            let (bv_mean, n) = mean(group.iter().map(|r| r.best_values[k]));
            let var = group.iter().map(|r| (r.best_values[k] - bv_mean).powi(2)).sum::<f64>() / n.max(1) as f64;
            let (bd_mean, _) = mean(group.iter().map(|r| r.best_distances[k]));
            IterationAggregate { iteration: k + 1, bv_mean, bv_std: var.sqrt(), bd_mean }
        })
        .collect();
    let (runtime_mean, _) = mean(group.iter().map(|r| r.runtime_s));
    Aggregate { method, schedule, runs: group.len(), failures, valid, curve, runtime_mean }
}
