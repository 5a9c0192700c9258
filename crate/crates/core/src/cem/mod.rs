//! Cross-entropy optimizers: the plain CE-method, the surrogate-augmented
//! variant and the mixture-model variant.
//!
//! All three minimize. Each iteration draws `m_k` samples from the current
//! proposal, evaluates them with the true objective, keeps the `m_elite_k`
//! lowest as true-elites and refits the proposal. The variants differ only
//! in what they refit on and how.

mod config;
mod objective;
mod schedule;
mod trace;

pub use config::{CemConfig, Method, ScheduleSpec, SubCeConfig};
pub use objective::{CountingObjective, FnObjective, Objective};
pub use schedule::{geometric_pmf, EvaluationSchedule};
pub use trace::{Clock, IterationRecord, NoClock, OptimizationTrace};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::distributions::{GaussianMixture, MultivariateGaussian, Proposal};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RngStream;
use crate::surrogate::GaussianProcessModel;

/// Indices of the `count` smallest values, best first. Stable: equal values
/// keep their sample order.
pub fn select_elites(values: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order.truncate(count);
    order
}

/// Plain CE-method: refit a Gaussian on the true-elites by maximum likelihood.
pub fn cross_entropy_method<O: Objective + ?Sized>(
    objective: &O,
    initial: &MultivariateGaussian,
    cfg: &CemConfig,
    rng: &mut RngStream,
) -> Result<OptimizationTrace> {
    run_method(Method::Ce, objective, initial.clone().into(), cfg, rng, &NoClock)
}

/// CE-surrogate: augment the true-elites with surrogate-selected points
/// before the maximum-likelihood refit.
pub fn ce_surrogate<O: Objective + ?Sized>(
    objective: &O,
    initial: &MultivariateGaussian,
    cfg: &CemConfig,
    rng: &mut RngStream,
) -> Result<OptimizationTrace> {
    run_method(Method::CeSurrogate, objective, initial.clone().into(), cfg, rng, &NoClock)
}

/// CE-mixture: like CE-surrogate, but the proposal is refit as a Gaussian
/// mixture seeded with one component per true-elite.
pub fn ce_mixture<O: Objective + ?Sized>(
    objective: &O,
    initial: Proposal,
    cfg: &CemConfig,
    rng: &mut RngStream,
) -> Result<OptimizationTrace> {
    run_method(Method::CeMixture, objective, initial, cfg, rng, &NoClock)
}

/// Runs `method` for `cfg.k_max` iterations and records the full trace.
pub fn run_method<O: Objective + ?Sized>(
    method: Method,
    objective: &O,
    initial: Proposal,
    cfg: &CemConfig,
    rng: &mut RngStream,
    clock: &dyn Clock,
) -> Result<OptimizationTrace> {
    cfg.validate()?;
    if initial.dim() != objective.dim() {
        return Err(Error::DimensionMismatch { expected: objective.dim(), actual: initial.dim() });
    }
    let start = clock.now();
    let mut schedule = EvaluationSchedule::new(cfg.schedule, cfg.m, cfg.m_elite, cfg.k_max)?;
    let mut counted = CountingObjective::new(objective);
    let mut proposal = initial.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut records = Vec::with_capacity(cfg.k_max);

    for k in 1..=cfg.k_max {
        let (m_k, elite_k) = schedule.allocation(k)?;
        if m_k == 0 {
            records.push(IterationRecord {
                iteration: k,
                samples_used: 0,
                elite_count: 0,
                samples: Matrix::with_cols(proposal.dim()),
                values: Vec::new(),
                elite_indices: Vec::new(),
                elite_threshold: None,
                refit_set_size: 0,
                proposal: proposal.clone(),
                best_value: best.as_ref().map(|b| b.0),
                best_point: best.as_ref().map(|b| b.1.clone()),
                evaluations: counted.calls(),
                fallback: None,
                elapsed_s: clock.now() - start,
            });
            continue;
        }

        let samples = proposal.sample(rng, m_k);
        let values = counted.call_all(samples.row_iter())?;
        let elite_indices = select_elites(&values, elite_k);
        let elite_threshold = elite_indices.last().map(|&i| values[i]);
        let top = elite_indices[0];
        if best.as_ref().is_none_or(|b| values[top] < b.0) {
            best = Some((values[top], samples.row(top).to_vec()));
        }
        let elites = samples.select_rows(&elite_indices);

        let mut fallback = None;
        let refit_set = match method {
            Method::Ce => elites.clone(),
            Method::CeSurrogate | Method::CeMixture => {
                let augmented = model_elite_set(&samples, &values, &proposal, &elites, m_k, elite_k, cfg, rng)?;
                fallback = augmented.fallback;
                augmented.elites
            }
        };
        proposal = match method {
            Method::Ce | Method::CeSurrogate => MultivariateGaussian::fit_mle(&refit_set)?.into(),
            Method::CeMixture => match fit_mixture(&proposal, &elites, &refit_set, cfg) {
                Ok(mix) => mix.into(),
                Err(e) => {
                    log::warn!("mixture fit failed ({e}); refitting a single Gaussian");
                    fallback = Some(format!("mixture fit failed: {e}"));
                    MultivariateGaussian::fit_mle(&refit_set)?.into()
                }
            },
        };

        records.push(IterationRecord {
            iteration: k,
            samples_used: m_k,
            elite_count: elite_k,
            samples,
            values,
            elite_indices,
            elite_threshold,
            refit_set_size: refit_set.rows(),
            proposal: proposal.clone(),
            best_value: best.as_ref().map(|b| b.0),
            best_point: best.as_ref().map(|b| b.1.clone()),
            evaluations: counted.calls(),
            fallback,
            elapsed_s: clock.now() - start,
        });
    }

    Ok(OptimizationTrace {
        method,
        config: cfg.clone(),
        initial,
        iterations: records,
        final_proposal: proposal,
        elapsed_s: clock.now() - start,
    })
}

/// Result of [`model_elite_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEliteSet {
    /// True-elites, then model-elites, then refined sub-elites.
    pub elites: Matrix,
    pub model_elite_count: usize,
    pub sub_elite_count: usize,
    /// Present when the surrogate could not be fit and only the true-elites were kept.
    pub fallback: Option<String>,
}

/// Builds the augmented elite set `E = e ∪ e_model ∪ e_sub`.
///
/// A GP is fit to all of this iteration's true evaluations. `factor·m`
/// candidates drawn from the proposal are scored by the GP and the best
/// `factor·m_elite` become model-elites; each true-elite is then refined by
/// a short CE run on the GP.
#[allow(clippy::too_many_arguments)]
pub fn model_elite_set(
    samples: &Matrix,
    values: &[f64],
    proposal: &Proposal,
    elites: &Matrix,
    m: usize,
    m_elite: usize,
    cfg: &CemConfig,
    rng: &mut RngStream,
) -> Result<ModelEliteSet> {
    if values.is_empty() || samples.rows() != values.len() {
        return Err(Error::DimensionMismatch { expected: samples.rows(), actual: values.len() });
    }
    let factor = cfg.surrogate_sample_factor;
    if factor == 0 && cfg.sub_ce.is_none() {
        return Ok(ModelEliteSet { elites: elites.clone(), model_elite_count: 0, sub_elite_count: 0, fallback: None });
    }

    let gp = match GaussianProcessModel::fit_with(samples, values, cfg.kernel, cfg.gp) {
        Ok(gp) => gp,
        Err(e) => {
            log::warn!("surrogate fit failed ({e}); using true-elites only");
            return Ok(ModelEliteSet {
                elites: elites.clone(),
                model_elite_count: 0,
                sub_elite_count: 0,
                fallback: Some(format!("surrogate fit failed: {e}")),
            });
        }
    };

    let mut out = elites.clone();

    let candidates = proposal.sample(rng, factor * m);
    let predicted = gp.predict_mean(&candidates)?;
    let model_elites = candidates.select_rows(&select_elites(&predicted, factor * m_elite));
    out.append(&model_elites)?;

    let mut sub_count = 0;
    if let Some(sub) = &cfg.sub_ce {
        let refined = sub_elite_set(&gp, proposal, elites, sub, rng)?;
        sub_count = refined.rows();
        out.append(&refined)?;
    }

    Ok(ModelEliteSet {
        elites: out,
        model_elite_count: model_elites.rows(),
        sub_elite_count: sub_count,
        fallback: None,
    })
}

/// Refines every true-elite with a short CE run on the surrogate.
///
/// Each run starts from `N(eₓ, Σ_M)` with `Σ_M` the proposal's covariance
/// and contributes the point with the lowest surrogate value seen, the
/// seed elite included. With `k_max = 0` the elites come back unchanged.
pub fn sub_elite_set(
    surrogate: &GaussianProcessModel,
    proposal: &Proposal,
    elites: &Matrix,
    sub: &SubCeConfig,
    rng: &mut RngStream,
) -> Result<Matrix> {
    if elites.is_empty() {
        return Err(Error::EmptyEliteSet);
    }
    if sub.k_max == 0 {
        return Ok(elites.clone());
    }
    let inner_cfg = CemConfig::new(sub.m, sub.m_elite, sub.k_max).without_augmentation();
    let base = MultivariateGaussian::new(proposal.mean(), proposal.covariance()).or_else(|_| {
        crate::distributions::regularize(proposal.covariance())
            .and_then(|(cov, _)| MultivariateGaussian::new(proposal.mean(), cov))
    })?;

    let mut out = Matrix::with_cols(elites.cols());
    for seed in elites.row_iter() {
        let start = base.with_mean(seed.to_vec())?;
        let trace = run_method(Method::Ce, surrogate, start.into(), &inner_cfg, rng, &NoClock)?;
        let seed_value = surrogate.predict_one(seed)?;
        let best = match (trace.best_value(), trace.best_point()) {
            (Some(v), Some(x)) if v < seed_value => x.to_vec(),
            _ => seed.to_vec(),
        };
        out.push_row(&best)?;
    }
    Ok(out)
}

/// Casts the proposal into a uniform mixture with one `N(eₓ, Σ_M)` component
/// per true-elite and fits it to the augmented elite set by EM.
fn fit_mixture(
    proposal: &Proposal,
    true_elites: &Matrix,
    refit_set: &Matrix,
    cfg: &CemConfig,
) -> Result<GaussianMixture> {
    let cov = proposal.covariance();
    let components = true_elites
        .row_iter()
        .map(|e| MultivariateGaussian::new(e.to_vec(), cov.clone()))
        .collect::<Result<Vec<_>>>()?;
    let init = GaussianMixture::uniform(components)?;
    let fit = init.fit_em(refit_set, cfg.em_max_iters, cfg.em_tol)?;
    Ok(fit.mixture)
}

impl core::fmt::Display for OptimizationTrace {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let best = self.best_value().map_or("none".to_string(), |v| format!("{v}"));
        write!(
            f,
            "{} run: {} iterations, {} evaluations, best {}",
            self.method,
            self.iterations.len(),
            self.evaluations(),
            best
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bowl() -> FnObjective<impl Fn(&[f64]) -> f64> {
        FnObjective::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1])
    }

    #[test]
    fn stable_elite_ties() {
        assert_eq!(select_elites(&[3.0, 1.0, 1.0, 0.5, 1.0], 3), vec![3, 1, 2]);
    }

    #[test]
    fn full_elite_fraction_fits_sample_mean() {
        let g = MultivariateGaussian::isotropic(vec![1.0, 1.0], 4.0).unwrap();
        let cfg = CemConfig::new(8, 8, 3);
        let trace = cross_entropy_method(&bowl(), &g, &cfg, &mut RngStream::new(4)).unwrap();
        for rec in &trace.iterations {
            let n = rec.samples.rows() as f64;
            let mean: Vec<f64> = (0..2).map(|j| rec.samples.row_iter().map(|r| r[j]).sum::<f64>() / n).collect();
            let fitted = rec.proposal.mean();
            assert!((fitted[0] - mean[0]).abs() < 1e-12 && (fitted[1] - mean[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_run() {
        let g = MultivariateGaussian::isotropic(vec![0.0, 0.0], 1.0).unwrap();
        let trace = cross_entropy_method(&bowl(), &g, &CemConfig::new(1, 1, 1), &mut RngStream::new(2)).unwrap();
        let rec = &trace.iterations[0];
        assert_eq!(trace.final_proposal.mean(), rec.samples.row(0));
        let cov = trace.final_proposal.covariance();
        assert!(cov.max_abs_diff(&Matrix::identity(2).scaled(crate::distributions::MIN_JITTER)) == 0.0);
    }

    #[test]
    fn nan_objective_errors() {
        let g = MultivariateGaussian::isotropic(vec![0.0, 0.0], 1.0).unwrap();
        let obj = FnObjective::new(2, |_: &[f64]| f64::NAN);
        let err = cross_entropy_method(&obj, &g, &CemConfig::new(5, 2, 2), &mut RngStream::new(0)).unwrap_err();
        assert!(matches!(err, Error::ObjectiveNan(_)));
        assert!(err.to_string().starts_with("objective returned NaN at x="));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = MultivariateGaussian::isotropic(vec![0.0; 3], 1.0).unwrap();
        assert!(cross_entropy_method(&bowl(), &g, &CemConfig::new(5, 2, 2), &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn sub_elites_identity_when_disabled() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]).unwrap();
        let gp = GaussianProcessModel::fit(&x, &[0.0, 2.0, 4.0], Default::default(), false).unwrap();
        let p: Proposal = MultivariateGaussian::isotropic(vec![0.0, 0.0], 1.0).unwrap().into();
        let e = x.select_rows(&[0, 1]);
        let sub = SubCeConfig { k_max: 0, ..SubCeConfig::default() };
        assert_eq!(sub_elite_set(&gp, &p, &e, &sub, &mut RngStream::new(0)).unwrap(), e);
    }

    #[test]
    fn model_elite_set_sizes() {
        let mut rng = RngStream::new(8);
        let g = MultivariateGaussian::isotropic(vec![0.0, 0.0], 4.0).unwrap();
        let x = g.sample(&mut rng, 10);
        let y: Vec<f64> = x.row_iter().map(|r| r[0] * r[0] + r[1] * r[1]).collect();
        let e = x.select_rows(&select_elites(&y, 5));
        let cfg = CemConfig::default();
        let set = model_elite_set(&x, &y, &g.into(), &e, 10, 5, &cfg, &mut rng).unwrap();
        assert_eq!(set.model_elite_count, 50);
        assert_eq!(set.sub_elite_count, 5);
        assert_eq!(set.elites.rows(), 60);
    }
}
