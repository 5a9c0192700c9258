//! Gaussian and Gaussian-mixture proposal distributions.

mod gaussian;
mod mixture;

pub use gaussian::{regularize, MultivariateGaussian, MIN_JITTER, RELATIVE_JITTER, SYMMETRY_TOLERANCE};
pub use mixture::{EmFit, GaussianMixture, EM_MAX_ITERS, EM_TOL, MIN_COMPONENT_MASS, WEIGHT_SUM_TOLERANCE};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::rng::RngStream;

/// The distribution an optimizer samples from: a single Gaussian, or a
/// mixture once the mixture variant has refit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proposal {
    Gaussian(MultivariateGaussian),
    Mixture(GaussianMixture),
}

impl Proposal {
    pub fn dim(&self) -> usize {
        match self {
            Proposal::Gaussian(g) => g.dim(),
            Proposal::Mixture(m) => m.dim(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream, count: usize) -> Matrix {
        match self {
            Proposal::Gaussian(g) => g.sample(rng, count),
            Proposal::Mixture(m) => m.sample(rng, count),
        }
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        match self {
            Proposal::Gaussian(g) => g.pdf(x),
            Proposal::Mixture(m) => m.pdf(x),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            Proposal::Gaussian(g) => g.mean().to_vec(),
            Proposal::Mixture(m) => m.mean(),
        }
    }

    /// Covariance of the proposal; for a mixture, the moment-matched total covariance.
    pub fn covariance(&self) -> Matrix {
        match self {
            Proposal::Gaussian(g) => g.covariance().clone(),
            Proposal::Mixture(m) => m.covariance(),
        }
    }
}

impl From<MultivariateGaussian> for Proposal {
    fn from(g: MultivariateGaussian) -> Self {
        Proposal::Gaussian(g)
    }
}

impl From<GaussianMixture> for Proposal {
    fn from(m: GaussianMixture) -> Self {
        Proposal::Mixture(m)
    }
}
