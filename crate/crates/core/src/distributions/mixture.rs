use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::gaussian::MultivariateGaussian;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RngStream;

/// Tolerance on `Σ wᵢ = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;
/// A component whose responsibility mass falls below this fraction of the
/// sample count keeps its previous mean and covariance during an M-step.
pub const MIN_COMPONENT_MASS: f64 = 1e-8;

/// Default EM iteration cap.
pub const EM_MAX_ITERS: usize = 50;
/// Default EM stopping tolerance on the log-likelihood improvement.
pub const EM_TOL: f64 = 1e-6;

/// Weighted mixture of Gaussians sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MixtureParams", try_from = "MixtureParams")]
pub struct GaussianMixture {
    components: Vec<MultivariateGaussian>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MixtureParams {
    components: Vec<MultivariateGaussian>,
    weights: Vec<f64>,
}

impl From<GaussianMixture> for MixtureParams {
    fn from(m: GaussianMixture) -> Self {
        MixtureParams { components: m.components, weights: m.weights }
    }
}

impl TryFrom<MixtureParams> for GaussianMixture {
    type Error = Error;

    fn try_from(p: MixtureParams) -> Result<Self> {
        GaussianMixture::new(p.components, p.weights)
    }
}

/// Outcome of [`GaussianMixture::fit_em`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub mixture: GaussianMixture,
    /// Log-likelihood of the samples under the initial mixture, then after each iteration.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
}

impl GaussianMixture {
    pub fn new(components: Vec<MultivariateGaussian>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidWeights("mixture needs at least one component".into()));
        }
        if components.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        let d = components[0].dim();
        if let Some(bad) = components.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: bad.dim() });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(GaussianMixture { components, weights })
    }

    /// Equal weight on every component.
    pub fn uniform(components: Vec<MultivariateGaussian>) -> Result<Self> {
        let n = components.len();
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self::new(components, vec![w; n])
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[MultivariateGaussian] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ wᵢ N(x | μᵢ, Σᵢ)`.
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.components.iter().zip(&self.weights).map(|(c, w)| w * libm::exp(c.log_pdf_unchecked(x))).sum())
    }

    /// Log-density computed with log-sum-exp, stable far from every component.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let mut terms = vec![0.0; self.len()];
        Ok(self.log_terms(x, &mut terms))
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: d });
        }
        Ok(())
    }

    // Fills `terms` with log wₖ + log N(x|k) and returns their log-sum-exp.
    fn log_terms(&self, x: &[f64], terms: &mut [f64]) -> f64 {
        for ((t, c), w) in terms.iter_mut().zip(&self.components).zip(&self.weights) {
            *t = libm::log(*w) + c.log_pdf_unchecked(x);
        }
        log_sum_exp(terms)
    }

    /// Total log-likelihood of the sample rows.
    pub fn log_likelihood(&self, samples: &Matrix) -> Result<f64> {
        self.check_dim(samples.cols())?;
        let mut terms = vec![0.0; self.len()];
        Ok(samples.row_iter().map(|x| self.log_terms(x, &mut terms)).sum())
    }

    /// Picks a component from the categorical weights, then samples it.
    pub fn sample(&self, rng: &mut RngStream, count: usize) -> Matrix {
        let mut out = Matrix::with_cols(self.dim());
        if count == 0 {
            return out;
        }
        // weights are validated non-negative with unit sum
        let picker = WeightedIndex::new(&self.weights).expect("validated mixture weights");
        for _ in 0..count {
            let k = picker.sample(rng);
            let _ = out.push_row(&self.components[k].sample_one(rng));
        }
        out
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for (c, w) in self.components.iter().zip(&self.weights) {
            for (m, ci) in mean.iter_mut().zip(c.mean()) {
                *m += w * ci;
            }
        }
        mean
    }

    /// Total (moment-matched) covariance: `Σ wᵢ(Σᵢ + μᵢμᵢᵀ) - μμᵀ`.
    pub fn covariance(&self) -> Matrix {
        let d = self.dim();
        let mean = self.mean();
        let mut cov = Matrix::zeros(d, d);
        for (c, w) in self.components.iter().zip(&self.weights) {
            let cm = c.mean();
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += w * (c.covariance()[(i, j)] + (cm[i] - mean[i]) * (cm[j] - mean[j]));
                }
            }
        }
        cov.symmetrize();
        cov
    }

    /// Expectation-maximization starting from `self`. The component count
    /// stays fixed. Stops after `max_iters` iterations or once the
    /// log-likelihood gains less than `tol`.
    pub fn fit_em(&self, samples: &Matrix, max_iters: usize, tol: f64) -> Result<EmFit> {
        let n = samples.rows();
        if n == 0 {
            return Err(Error::EmptyEliteSet);
        }
        self.check_dim(samples.cols())?;
        let k = self.len();

        let mut current = self.clone();
        let mut resp = Matrix::zeros(n, k);
        let mut ll = current.e_step(samples, &mut resp)?;
        let mut history = vec![ll];
        let mut iterations = 0;

        while iterations < max_iters {
            current = current.m_step(samples, &resp)?;
            iterations += 1;
            let next = current.e_step(samples, &mut resp)?;
            history.push(next);
            let gain = next - ll;
            ll = next;
            if gain < tol {
                break;
            }
        }
        Ok(EmFit { mixture: current, log_likelihoods: history, iterations })
    }

    fn e_step(&self, samples: &Matrix, resp: &mut Matrix) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..samples.rows() {
            let row = resp.row_mut(i);
            let lse = self.log_terms(samples.row(i), row);
            if !lse.is_finite() {
                return Err(Error::DegenerateResponsibilities);
            }
            for r in row.iter_mut() {
                *r = libm::exp(*r - lse);
            }
            total += lse;
        }
        Ok(total)
    }

    fn m_step(&self, samples: &Matrix, resp: &Matrix) -> Result<GaussianMixture> {
        let n = samples.rows();
        let mut components = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        let mut column = vec![0.0; n];
        for (j, prev) in self.components.iter().enumerate() {
            for (i, c) in column.iter_mut().enumerate() {
                *c = resp[(i, j)];
            }
            let mass: f64 = column.iter().sum();
            weights.push(mass / n as f64);
            if mass < MIN_COMPONENT_MASS * n as f64 {
                components.push(prev.clone());
            } else {
                components.push(MultivariateGaussian::fit_weighted(samples, &column)?);
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateResponsibilities);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        GaussianMixture::new(components, weights)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + libm::log(terms.iter().map(|t| libm::exp(t - max)).sum::<f64>())
}
