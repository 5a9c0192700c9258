use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::{CemConfig, Method};
use crate::distributions::Proposal;
use crate::linalg::Matrix;

/// Source of wall-clock time, in seconds from an arbitrary origin.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances; used where no time source exists.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Everything recorded about one optimizer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: usize,
    /// True evaluations spent this iteration (`m_k`).
    pub samples_used: usize,
    /// Elite count this iteration (`min(m_elite, m_k)`).
    pub elite_count: usize,
    pub samples: Matrix,
    pub values: Vec<f64>,
    /// Indices into `samples`, best first; ties keep sample order.
    pub elite_indices: Vec<usize>,
    /// Worst (largest) elite value. `None` for an empty iteration.
    pub elite_threshold: Option<f64>,
    /// Size of the set the proposal was refit on.
    pub refit_set_size: usize,
    /// Proposal after this iteration's refit.
    pub proposal: Proposal,
    /// Best true value seen so far.
    pub best_value: Option<f64>,
    pub best_point: Option<Vec<f64>>,
    /// Cumulative true evaluations.
    pub evaluations: usize,
    /// Set when a degraded path was taken (surrogate or EM failure).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
    /// Seconds since the run started. Not serialized, so traces of equal
    /// seeds stay byte-identical.
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl IterationRecord {
    pub fn is_empty(&self) -> bool {
        self.samples_used == 0
    }
}

/// Full record of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub method: Method,
    pub config: CemConfig,
    pub initial: Proposal,
    pub iterations: Vec<IterationRecord>,
    pub final_proposal: Proposal,
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl OptimizationTrace {
    pub fn evaluations(&self) -> usize {
        self.iterations.last().map_or(0, |r| r.evaluations)
    }

    pub fn best_value(&self) -> Option<f64> {
        self.iterations.last().and_then(|r| r.best_value)
    }

    pub fn best_point(&self) -> Option<&[f64]> {
        self.iterations.last().and_then(|r| r.best_point.as_deref())
    }

    /// Best-so-far value after each iteration.
    pub fn best_values(&self) -> Vec<Option<f64>> {
        self.iterations.iter().map(|r| r.best_value).collect()
    }
}
