//! Per-iteration allocation of the true-evaluation budget `N = m·k_max`.

use alloc::format;

use super::config::ScheduleSpec;
use crate::error::{Error, Result};

/// Geometric pmf `p(1-p)^k`.
pub fn geometric_pmf(p: f64, k: usize) -> f64 {
    p * libm::pow(1.0 - p, k as f64)
}

/// Stateful evaluation schedule. The budgeted geometric kind tracks spent
/// budget and must be queried for `k = 1, 2, …` in order.
#[derive(Debug, Clone)]
pub struct EvaluationSchedule {
    spec: ScheduleSpec,
    m: usize,
    m_elite: usize,
    k_max: usize,
    next_k: usize,
    spent: usize,
}

impl EvaluationSchedule {
    pub fn new(spec: ScheduleSpec, m: usize, m_elite: usize, k_max: usize) -> Result<Self> {
        spec.validate()?;
        if k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be at least 1".into()));
        }
        Ok(EvaluationSchedule { spec, m, m_elite, k_max, next_k: 1, spent: 0 })
    }

    pub fn budget(&self) -> usize {
        self.m * self.k_max
    }

    /// `(m_k, m_elite_k)` for iteration `k` (1-based).
    pub fn allocation(&mut self, k: usize) -> Result<(usize, usize)> {
        if k == 0 || k > self.k_max {
            return Err(Error::InvalidConfig(format!("iteration {k} outside 1..={}", self.k_max)));
        }
        let m_k = match self.spec {
            ScheduleSpec::Uniform => self.m,
            ScheduleSpec::GeometricLiteral { p } => self.literal(p, k)?,
            ScheduleSpec::GeometricBudgeted { p } => {
                if k != self.next_k {
                    return Err(Error::ScheduleOutOfOrder { expected: self.next_k, actual: k });
                }
                self.budgeted(p, k)
            }
        };
        self.next_k = k + 1;
        self.spent += m_k;
        Ok((m_k, self.m_elite.min(m_k)))
    }

    fn rounded_share(&self, share: f64) -> usize {
        libm::round(self.budget() as f64 * share) as usize
    }

    // round(N·p_G(k)) for k < k_max, and min(N - s, N - round(N·p_G(k_max)))
    // on the final iteration, where s sums the earlier allocations.
    fn literal(&self, p: f64, k: usize) -> Result<usize> {
        let n = self.budget() as i64;
        let raw = self.rounded_share(geometric_pmf(p, k)) as i64;
        if k < self.k_max {
            return Ok(raw as usize);
        }
        let s: i64 = (1..self.k_max).map(|i| self.rounded_share(geometric_pmf(p, i)) as i64).sum();
        let m = (n - s).min(n - raw);
        if m < 0 {
            return Err(Error::InvalidConfig(format!("schedule produced negative allocation {m}")));
        }
        Ok(m as usize)
    }

    // round(N·q(k-1)) against the geometric pmf truncated to k_max support,
    // capped by the remaining budget; the final iteration takes what is left.
    fn budgeted(&self, p: f64, k: usize) -> usize {
        let remaining = self.budget() - self.spent;
        if k == self.k_max {
            return remaining;
        }
        let mass = 1.0 - libm::pow(1.0 - p, self.k_max as f64);
        self.rounded_share(geometric_pmf(p, k - 1) / mass).min(remaining)
    }
}
