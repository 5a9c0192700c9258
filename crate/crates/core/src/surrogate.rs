//! Zero-mean Gaussian-process regression with a squared-exponential kernel.
//!
//! Targets are rescaled before fitting (see [`TargetScaling`]) and mapped
//! back on prediction.
//! Hyperparameters `(log σ², log ℓ)` can be tuned by gradient ascent on the
//! log marginal likelihood.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Cholesky, Matrix};

pub const MIN_LENGTH_SCALE: f64 = 1e-3;
pub const MAX_LENGTH_SCALE: f64 = 1e3;
/// Noise is escalated tenfold on factorization failure up to this value.
pub const MAX_NOISE: f64 = 1e-2;
const STD_FLOOR: f64 = 1e-12;
// keeps log σ² within a sane range while optimizing
const LOG_VARIANCE_BOUNDS: (f64, f64) = (-20.0, 20.0);

/// Squared-exponential kernel hyperparameters plus observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub variance: f64,
    pub length_scale: f64,
    pub noise: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams { variance: 1.0, length_scale: 1.0, noise: 1e-6 }
    }
}

impl KernelParams {
    pub fn new(variance: f64, length_scale: f64, noise: f64) -> Result<Self> {
        let p = KernelParams { variance, length_scale, noise };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel variance must be positive, got {}", self.variance)));
        }
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidParameter(format!("kernel noise must be non-negative, got {}", self.noise)));
        }
        Ok(())
    }
}

/// `σ² exp(-|x - x'|² / 2ℓ²)`.
pub fn kernel_se(x: &[f64], x_prime: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != x_prime.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: x_prime.len() });
    }
    Ok(se(squared_distance(x, x_prime), params))
}

#[inline]
fn se(sq_dist: f64, p: &KernelParams) -> f64 {
    p.variance * libm::exp(-sq_dist / (2.0 * p.length_scale * p.length_scale))
}

/// Options for [`GaussianProcessModel::fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpOptions {
    /// Tune `(log σ², log ℓ)` by maximizing the log marginal likelihood.
    pub optimize: bool,
    /// Gradient-ascent iteration cap.
    pub max_iters: usize,
    pub scaling: TargetScaling,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions { optimize: true, max_iters: 100, scaling: TargetScaling::Scale }
    }
}

/// How targets are transformed before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScaling {
    /// Fit raw targets.
    None,
    /// Divide by the root-mean-square target. The prior mean stays at zero,
    /// and `σ²` and `σₙ²` become relative to the target magnitude.
    #[default]
    Scale,
    /// Subtract the mean and divide by the standard deviation. Far from the
    /// data, predictions revert to the target mean.
    Standardize,
}

/// A fitted GP: training data, kernel, Cholesky of `K + σₙ²I` and `α`.
#[derive(Debug, Clone)]
pub struct GaussianProcessModel {
    inputs: Matrix,
    targets: Vec<f64>,
    kernel: KernelParams,
    target_mean: f64,
    target_scale: f64,
    scaled_targets: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
}

// One factorization of the Gram matrix at fixed hyperparameters.
struct Factored {
    kernel: KernelParams,
    chol: Cholesky,
    alpha: Vec<f64>,
}

impl GaussianProcessModel {
    /// Fits with default options and `optimize` as given.
    pub fn fit(inputs: &Matrix, targets: &[f64], kernel: KernelParams, optimize: bool) -> Result<Self> {
        Self::fit_with(inputs, targets, kernel, GpOptions { optimize, ..GpOptions::default() })
    }

    pub fn fit_with(inputs: &Matrix, targets: &[f64], kernel: KernelParams, opts: GpOptions) -> Result<Self> {
        kernel.validate()?;
        let n = inputs.rows();
        if n == 0 {
            return Err(Error::InvalidParameter("Gaussian process needs at least one training point".into()));
        }
        if targets.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: targets.len() });
        }
        if !targets.iter().all(|y| y.is_finite()) || !inputs.is_finite() {
            return Err(Error::InvalidParameter("non-finite training data".into()));
        }

        let (target_mean, target_scale) = match opts.scaling {
            TargetScaling::None => (0.0, 1.0),
            TargetScaling::Scale => {
                let ms = targets.iter().map(|y| y * y).sum::<f64>() / n as f64;
                (0.0, libm::sqrt(ms).max(STD_FLOOR))
            }
            TargetScaling::Standardize => {
                let mean = targets.iter().sum::<f64>() / n as f64;
                let var = targets.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
                (mean, libm::sqrt(var).max(STD_FLOOR))
            }
        };
        let scaled_targets: Vec<f64> = targets.iter().map(|y| (y - target_mean) / target_scale).collect();

        let sq = pairwise_sq_distances(inputs);
        let mut best = factor(&sq, &scaled_targets, kernel)?;
        if opts.optimize {
            best = optimize_hyperparameters(&sq, &scaled_targets, best, opts.max_iters);
        }

        Ok(GaussianProcessModel {
            inputs: inputs.clone(),
            targets: targets.to_vec(),
            kernel: best.kernel,
            target_mean,
            target_scale,
            scaled_targets,
            chol: best.chol,
            alpha: best.alpha,
        })
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    fn cross_kernel(&self, x: &[f64]) -> Vec<f64> {
        self.inputs.row_iter().map(|xi| se(squared_distance(x, xi), &self.kernel)).collect()
    }

    /// Posterior mean at one point.
    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        let k = self.cross_kernel(x);
        let z: f64 = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        Ok(self.target_mean + self.target_scale * z)
    }

    /// Posterior mean `k(X*, X) α` for each row of `points`.
    pub fn predict_mean(&self, points: &Matrix) -> Result<Vec<f64>> {
        points.row_iter().map(|x| self.predict_one(x)).collect()
    }

    /// Posterior variance of the latent function (diagnostics only).
    pub fn predict_variance(&self, points: &Matrix) -> Result<Vec<f64>> {
        points
            .row_iter()
            .map(|x| {
                if x.len() != self.dim() {
                    return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
                }
                let k = self.cross_kernel(x);
                let v = self.chol.solve_lower(&k);
                let reduced = self.kernel.variance - v.iter().map(|t| t * t).sum::<f64>();
                Ok(reduced.max(0.0) * self.target_scale * self.target_scale)
            })
            .collect()
    }

    /// Log marginal likelihood of the rescaled targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        lml(&self.scaled_targets, &self.alpha, &self.chol)
    }
}

fn pairwise_sq_distances(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = squared_distance(x.row(i), x.row(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn gram(sq: &Matrix, p: &KernelParams) -> Matrix {
    let n = sq.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = se(sq[(i, j)], p);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += p.noise;
    }
    k
}

// Factors K + σₙ²I, escalating the noise tenfold (from at least 1e-12) up to MAX_NOISE.
fn factor(sq: &Matrix, y: &[f64], kernel: KernelParams) -> Result<Factored> {
    let mut p = kernel;
    loop {
        if let Ok(chol) = Cholesky::new(&gram(sq, &p)) {
            let alpha = chol.solve(y);
            return Ok(Factored { kernel: p, chol, alpha });
        }
        if p.noise >= MAX_NOISE {
            return Err(Error::IllConditionedGram);
        }
        p.noise = (p.noise * 10.0).clamp(1e-12, MAX_NOISE);
    }
}

fn lml(y: &[f64], alpha: &[f64], chol: &Cholesky) -> f64 {
    let n = y.len() as f64;
    let fit: f64 = y.iter().zip(alpha).map(|(a, b)| a * b).sum();
    -0.5 * fit - 0.5 * chol.log_det() - 0.5 * n * libm::log(2.0 * PI)
}

/// Gradient of the log marginal likelihood with respect to `(log σ², log ℓ)`.
fn lml_gradient(sq: &Matrix, f: &Factored) -> [f64; 2] {
    let n = sq.rows();
    let inv = f.chol.inverse();
    let l2 = f.kernel.length_scale * f.kernel.length_scale;
    let mut g_var = 0.0;
    let mut g_len = 0.0;
    for i in 0..n {
        for j in 0..n {
            // W = ααᵀ - K⁻¹
            let w = f.alpha[i] * f.alpha[j] - inv[(i, j)];
            let k = se(sq[(i, j)], &f.kernel);
            g_var += w * k;
            g_len += w * k * sq[(i, j)] / l2;
        }
    }
    [0.5 * g_var, 0.5 * g_len]
}

fn with_log_params(base: &KernelParams, log_var: f64, log_len: f64) -> KernelParams {
    KernelParams {
        variance: libm::exp(log_var.clamp(LOG_VARIANCE_BOUNDS.0, LOG_VARIANCE_BOUNDS.1)),
        length_scale: libm::exp(log_len).clamp(MIN_LENGTH_SCALE, MAX_LENGTH_SCALE),
        noise: base.noise,
    }
}

/// Gradient ascent with step halving: a step is only taken when it raises
/// the likelihood, so the result never scores below the starting point.
fn optimize_hyperparameters(sq: &Matrix, y: &[f64], start: Factored, max_iters: usize) -> Factored {
    let mut current = start;
    let mut current_lml = lml(y, &current.alpha, &current.chol);
    let mut step = 0.1;
    for _ in 0..max_iters {
        let g = lml_gradient(sq, &current);
        let norm = libm::sqrt(g[0] * g[0] + g[1] * g[1]);
        if !norm.is_finite() || norm < 1e-8 {
            break;
        }
        let log_var = libm::log(current.kernel.variance);
        let log_len = libm::log(current.kernel.length_scale);
        let mut accepted = false;
        while step > 1e-8 {
            // normalized direction, step measured in log-parameter units
            let cand = with_log_params(&current.kernel, log_var + step * g[0] / norm, log_len + step * g[1] / norm);
            if let Ok(f) = factor(sq, y, cand) {
                let val = lml(y, &f.alpha, &f.chol);
                if val.is_finite() && val > current_lml {
                    current = f;
                    current_lml = val;
                    accepted = true;
                    step *= 2.0;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    current
}
