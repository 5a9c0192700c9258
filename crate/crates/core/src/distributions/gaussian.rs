use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::rng::RngStream;

/// Maximum tolerated `|Σ - Σᵀ|` entry at construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Relative jitter added to refitted covariances, as a fraction of `trace(Σ)/d`.
pub const RELATIVE_JITTER: f64 = 1e-9;
/// Absolute floor for the jitter.
pub const MIN_JITTER: f64 = 1e-12;

/// Dense multivariate normal `N(μ, Σ)` with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GaussianParams", try_from = "GaussianParams")]
pub struct MultivariateGaussian {
    mean: Vec<f64>,
    covariance: Matrix,
    chol: Cholesky,
}

#[derive(Serialize, Deserialize)]
struct GaussianParams {
    mean: Vec<f64>,
    covariance: Matrix,
}

impl From<MultivariateGaussian> for GaussianParams {
    fn from(g: MultivariateGaussian) -> Self {
        GaussianParams { mean: g.mean, covariance: g.covariance }
    }
}

impl TryFrom<GaussianParams> for MultivariateGaussian {
    type Error = Error;

    fn try_from(p: GaussianParams) -> Result<Self> {
        MultivariateGaussian::new(p.mean, p.covariance)
    }
}

impl MultivariateGaussian {
    /// Validates shape, symmetry and positive definiteness.
    pub fn new(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidParameter("zero-dimensional Gaussian".into()));
        }
        if covariance.rows() != d || covariance.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: covariance.rows() });
        }
        if !mean.iter().all(|v| v.is_finite()) || !covariance.is_finite() {
            return Err(Error::InvalidParameter("non-finite mean or covariance".into()));
        }
        let asym = covariance.max_asymmetry();
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        let chol = Cholesky::new(&covariance)?;
        Ok(MultivariateGaussian { mean, covariance, chol })
    }

    /// `N(μ, c·I)`.
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, Matrix::identity(d).scaled(variance))
    }

    /// Same covariance, new mean. Reuses the factorization.
    pub fn with_mean(&self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: mean.len() });
        }
        Ok(MultivariateGaussian { mean, covariance: self.covariance.clone(), chol: self.chol.clone() })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        Ok(self.log_pdf_unchecked(x))
    }

    pub(crate) fn log_pdf_unchecked(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let z = self.chol.solve_lower(&diff);
        let maha: f64 = z.iter().map(|v| v * v).sum();
        -0.5 * (self.dim() as f64 * libm::log(2.0 * PI) + self.chol.log_det() + maha)
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.log_pdf(x).map(libm::exp)
    }

    /// Draws `count` rows as `μ + L z` with `z` standard normal.
    pub fn sample(&self, rng: &mut RngStream, count: usize) -> Matrix {
        let mut out = Matrix::with_cols(self.dim());
        let mut z = alloc::vec![0.0; self.dim()];
        for _ in 0..count {
            let x = self.sample_with(rng, &mut z);
            // dimensions agree by construction
            let _ = out.push_row(&x);
        }
        out
    }

    fn sample_with(&self, rng: &mut RngStream, z: &mut [f64]) -> Vec<f64> {
        for v in z.iter_mut() {
            *v = rng.standard_normal();
        }
        let mut x = self.chol.lower_mul(z);
        for (xi, mi) in x.iter_mut().zip(&self.mean) {
            *xi += mi;
        }
        x
    }

    pub fn sample_one(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut z = alloc::vec![0.0; self.dim()];
        self.sample_with(rng, &mut z)
    }

    /// Maximum-likelihood fit: sample mean and biased (1/n) scatter matrix,
    /// symmetrized and jittered so the result is always factorable.
    pub fn fit_mle(samples: &Matrix) -> Result<Self> {
        let n = samples.rows();
        if n == 0 {
            return Err(Error::EmptyEliteSet);
        }
        let weights = alloc::vec![1.0; n];
        Self::fit_weighted(samples, &weights)
    }

    /// Weighted maximum-likelihood fit, weights need not be normalized.
    pub(crate) fn fit_weighted(samples: &Matrix, weights: &[f64]) -> Result<Self> {
        let d = samples.cols();
        let total: f64 = weights.iter().sum();
        if samples.is_empty() || !(total > 0.0) {
            return Err(Error::EmptyEliteSet);
        }
        let mut mean = alloc::vec![0.0; d];
        for (x, &w) in samples.row_iter().zip(weights) {
            for (m, xi) in mean.iter_mut().zip(x) {
                *m += w * xi;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);

        let mut cov = Matrix::zeros(d, d);
        for (x, &w) in samples.row_iter().zip(weights) {
            for i in 0..d {
                let di = x[i] - mean[i];
                for j in 0..=i {
                    cov[(i, j)] += w * di * (x[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..=i {
                let v = cov[(i, j)] / total;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let (cov, chol) = regularize(cov)?;
        Ok(MultivariateGaussian { mean, covariance: cov, chol })
    }
}

/// Symmetrizes and adds `max(1e-9·trace/d, 1e-12)` to the diagonal. If the
/// factorization still fails the jitter is escalated tenfold a few times.
pub fn regularize(mut cov: Matrix) -> Result<(Matrix, Cholesky)> {
    cov.symmetrize();
    let d = cov.rows().max(1) as f64;
    let mut jitter = (RELATIVE_JITTER * cov.trace() / d).max(MIN_JITTER);
    for _ in 0..6 {
        let mut candidate = cov.clone();
        candidate.add_diagonal(jitter);
        if let Ok(chol) = Cholesky::new(&candidate) {
            return Ok((candidate, chol));
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite)
}
