//! File formats: summary and curve CSVs, sierra grids, per-run trace JSON.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! and writing it again reproduces it byte for byte.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use cem_core::cem::{Method, OptimizationTrace, ScheduleSpec};
use cem_core::sierra::{GridPoint, SierraParams};
use serde::{Deserialize, Serialize};

use crate::bench::{ExperimentResult, RunRecord, SummaryRow};

pub const SUMMARY_HEADER: [&str; 6] = ["experiment", "method", "schedule", "runtime_s", "bv", "bd"];
pub const CURVES_HEADER: [&str; 6] = ["experiment", "method", "schedule", "iteration", "bv_mean", "bv_std"];
pub const GRID_HEADER: [&str; 3] = ["x1", "x2", "S"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub experiment: String,
    pub method: String,
    pub schedule: String,
    pub iteration: usize,
    pub bv_mean: f64,
    pub bv_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x1: f64,
    pub x2: f64,
    #[serde(rename = "S")]
    pub s: f64,
}

impl From<GridPoint> for GridRow {
    fn from(g: GridPoint) -> Self {
        GridRow { x1: g.x1, x2: g.x2, s: g.value }
    }
}

/// One trace document: what was run, on which seed, and what happened.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDocument<'a> {
    pub experiment: &'a str,
    pub method: Method,
    pub schedule: ScheduleSpec,
    pub seed: u64,
    pub objective: SierraParams,
    pub trace: &'a OptimizationTrace,
}

pub fn curve_rows(result: &ExperimentResult) -> Vec<CurveRow> {
    result
        .aggregates
        .iter()
        .flat_map(|a| {
            a.curve.iter().map(move |c| CurveRow {
                experiment: result.spec.id.to_string(),
                method: a.method.to_string(),
                schedule: a.schedule.to_string(),
                iteration: c.iteration,
                bv_mean: c.bv_mean,
                bv_std: c.bv_std,
            })
        })
        .collect()
}

/// Writes rows with a fixed header; the header is written even with no rows.
pub fn write_csv<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read, T: for<'de> Deserialize<'de>>(input: R) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn write_trace<W: Write>(out: W, doc: &RunDocument<'_>) -> serde_json::Result<()> {
    let mut out = io::BufWriter::new(out);
    serde_json::to_writer_pretty(&mut out, doc)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

/// `traces/<method>_<schedule>_seed<n>.json`, with `:` in schedule labels
/// replaced so names are portable.
pub fn trace_path(dir: &Path, run: &RunRecord) -> PathBuf {
    let schedule = run.schedule.to_string().replace(':', "-");
    dir.join("traces").join(format!("{}_{}_seed{}.json", run.method, schedule, run.seed))
}

/// Writes `summary.csv`, `curves.csv` and one trace per run under `dir`.
pub fn write_experiment(dir: &Path, result: &ExperimentResult, rows: &[SummaryRow]) -> io::Result<()> {
    fs::create_dir_all(dir.join("traces"))?;
    write_csv(File::create(dir.join("summary.csv"))?, &SUMMARY_HEADER, rows).map_err(io::Error::other)?;
    write_csv(File::create(dir.join("curves.csv"))?, &CURVES_HEADER, &curve_rows(result)).map_err(io::Error::other)?;
    for run in &result.runs {
        let doc = RunDocument {
            experiment: result.spec.id.label(),
            method: run.method,
            schedule: run.schedule,
            seed: run.seed,
            objective: result.spec.objective,
            trace: &run.trace,
        };
        write_trace(File::create(trace_path(dir, run))?, &doc).map_err(io::Error::other)?;
    }
    Ok(())
}
