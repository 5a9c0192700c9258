use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{EM_MAX_ITERS, EM_TOL};
use crate::error::{Error, Result};
use crate::surrogate::{GpOptions, KernelParams};

/// Which optimizer to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ce")]
    Ce,
    #[serde(rename = "ce-surrogate")]
    CeSurrogate,
    #[serde(rename = "ce-mixture")]
    CeMixture,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ce, Method::CeSurrogate, Method::CeMixture];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Ce => "ce",
            Method::CeSurrogate => "ce-surrogate",
            Method::CeMixture => "ce-mixture",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(Method::Ce),
            "ce-surrogate" => Ok(Method::CeSurrogate),
            "ce-mixture" => Ok(Method::CeMixture),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// How the true-evaluation budget `m·k_max` is spread over iterations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    /// `m` evaluations every iteration.
    #[default]
    Uniform,
    /// Front-loaded truncated-geometric allocation that always spends the
    /// whole budget, possibly leaving trailing iterations empty.
    GeometricBudgeted { p: f64 },
    /// The geometric allocation with its final-iteration correction taken verbatim.
    GeometricLiteral { p: f64 },
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScheduleSpec::Uniform => Ok(()),
            ScheduleSpec::GeometricBudgeted { p } | ScheduleSpec::GeometricLiteral { p } => {
                if *p > 0.0 && *p < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!("geometric schedule needs p in (0,1), got {p}")))
                }
            }
        }
    }
}

/// Labels: `uniform`, `geom:<p>`, `geom-literal:<p>`.
impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Uniform => f.write_str("uniform"),
            ScheduleSpec::GeometricBudgeted { p } => write!(f, "geom:{p}"),
            ScheduleSpec::GeometricLiteral { p } => write!(f, "geom-literal:{p}"),
        }
    }
}

impl FromStr for ScheduleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_p = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad schedule parameter '{v}'")))
        };
        let spec = if s == "uniform" {
            ScheduleSpec::Uniform
        } else if let Some(p) = s.strip_prefix("geom-literal:") {
            ScheduleSpec::GeometricLiteral { p: parse_p(p)? }
        } else if let Some(p) = s.strip_prefix("geom:") {
            ScheduleSpec::GeometricBudgeted { p: parse_p(p)? }
        } else {
            return Err(Error::InvalidConfig(format!(
                "unknown schedule '{s}' (expected uniform, geom:<p> or geom-literal:<p>)"
            )));
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parameters of the inner CE runs that refine each true-elite on the surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubCeConfig {
    pub m: usize,
    pub m_elite: usize,
    /// Zero disables refinement: every true-elite is returned unchanged.
    pub k_max: usize,
}

impl Default for SubCeConfig {
    fn default() -> Self {
        SubCeConfig { m: 10, m_elite: 5, k_max: 2 }
    }
}

/// Optimizer configuration shared by the three methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemConfig {
    /// Samples (true evaluations) per iteration.
    pub m: usize,
    pub m_elite: usize,
    pub k_max: usize,
    pub schedule: ScheduleSpec,
    /// The surrogate is queried on `factor·m` proposal samples and the best
    /// `factor·m_elite` predictions join the elite set. Zero disables it.
    pub surrogate_sample_factor: usize,
    /// `None` disables the per-elite refinement runs.
    pub sub_ce: Option<SubCeConfig>,
    pub kernel: KernelParams,
    pub gp: GpOptions,
    pub em_max_iters: usize,
    pub em_tol: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            m: 10,
            m_elite: 5,
            k_max: 10,
            schedule: ScheduleSpec::Uniform,
            surrogate_sample_factor: 10,
            sub_ce: Some(SubCeConfig::default()),
            kernel: KernelParams::default(),
            gp: GpOptions::default(),
            em_max_iters: EM_MAX_ITERS,
            em_tol: EM_TOL,
        }
    }
}

impl CemConfig {
    pub fn new(m: usize, m_elite: usize, k_max: usize) -> Self {
        CemConfig { m, m_elite, k_max, ..CemConfig::default() }
    }

    pub fn with_schedule(mut self, schedule: ScheduleSpec) -> Self {
        self.schedule = schedule;
        self
    }

    /// Turns off both the surrogate model-elites and the refinement runs.
    pub fn without_augmentation(mut self) -> Self {
        self.surrogate_sample_factor = 0;
        self.sub_ce = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(msg: String) -> Result<()> {
            Err(Error::InvalidConfig(msg))
        }
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.m_elite == 0 {
            return bad("m_elite must be positive".into());
        }
        if self.m_elite > self.m {
            return bad(format!("m_elite ({}) must not exceed m ({})", self.m_elite, self.m));
        }
        if self.k_max == 0 {
            return bad("k_max must be at least 1".into());
        }
        self.schedule.validate()?;
        if let Some(sub) = &self.sub_ce {
            if sub.k_max > 0 && (sub.m == 0 || sub.m_elite == 0 || sub.m_elite > sub.m) {
                return bad(format!("sub-CE needs 1 <= m_elite <= m, got m={} m_elite={}", sub.m, sub.m_elite));
            }
        }
        self.kernel.validate()?;
        if !(self.em_tol >= 0.0) {
            return bad("em_tol must be non-negative".into());
        }
        Ok(())
    }
}
