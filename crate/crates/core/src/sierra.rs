//! The "sierra" test objective: the negative density of a fixed 49-component
//! Gaussian mixture with one sharp global minimum at the center and 48 local
//! minima fanned out around it in an `s` shape.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cem::Objective;
use crate::distributions::{GaussianMixture, MultivariateGaussian};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Cluster offsets, scaled by `δ`.
pub const CLUSTER_SIGNS: [[f64; 2]; 4] = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
/// Fan-out points; the 1-based position in this list is the decay index.
pub const FAN_POINTS: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [3.0, 1.0], [0.0, 2.0], [1.0, 3.0]];
/// Largest grid [`SierraFunction::grid`] will evaluate.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

/// Parameters of the sierra function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SierraParams {
    pub center: [f64; 2],
    pub sigma: f64,
    pub cluster_distance: f64,
    pub spread_rate: f64,
    pub decay: bool,
}

impl Default for SierraParams {
    fn default() -> Self {
        SierraParams { center: [0.0, 0.0], sigma: 3.0, cluster_distance: 2.0, spread_rate: 6.0, decay: true }
    }
}

impl SierraParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self.center.iter().all(|v| v.is_finite())
            && self.sigma.is_finite()
            && self.cluster_distance.is_finite()
            && self.spread_rate.is_finite();
        if !finite || !(self.sigma > 0.0) || !(self.spread_rate > 0.0) {
            return Err(Error::InvalidParameter(
                "sierra needs finite parameters with sigma > 0 and spread rate > 0".into(),
            ));
        }
        Ok(())
    }
}

/// A built sierra objective `S(x) = -p(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SierraFunction {
    params: SierraParams,
    mixture: GaussianMixture,
}

/// One row of a surface grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x1: f64,
    pub x2: f64,
    pub value: f64,
}

impl SierraFunction {
    /// Enumerates the 48 local components in (cluster, fan point, sign)
    /// order, then appends the global component `N(μ̃, Σ̃/(ση))`.
    pub fn build(params: SierraParams) -> Result<Self> {
        params.validate()?;
        let SierraParams { center, sigma, cluster_distance: delta, spread_rate: eta, decay } = params;
        let mut components = Vec::with_capacity(49);
        for g in CLUSTER_SIGNS {
            for (idx, p) in FAN_POINTS.iter().enumerate() {
                let scale = if decay { (idx + 1) as f64 } else { 1.0 };
                let variance = sigma * scale / eta;
                for s in [sigma, -sigma] {
                    let mean = vec![g[0] * delta + s * p[0] + center[0], g[1] * delta + s * p[1] + center[1]];
                    components.push(MultivariateGaussian::isotropic(mean, variance)?);
                }
            }
        }
        components.push(MultivariateGaussian::isotropic(center.to_vec(), sigma / (sigma * eta))?);
        let mixture = GaussianMixture::uniform(components)?;
        Ok(SierraFunction { params, mixture })
    }

    pub fn params(&self) -> &SierraParams {
        &self.params
    }

    pub fn mixture(&self) -> &GaussianMixture {
        &self.mixture
    }

    /// The global minimizer, `μ̃`.
    pub fn optimum(&self) -> [f64; 2] {
        self.params.center
    }

    /// `S(x) = -Σ N(x | μⱼ, Σⱼ) / 49`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.mixture.pdf(x).map(|p| -p)
    }

    /// Evaluates a row-major grid over `[lo, hi]` with `x1` varying fastest.
    pub fn grid(&self, lo: [f64; 2], hi: [f64; 2], step: f64) -> Result<Vec<GridPoint>> {
        let (n1, n2) = grid_shape(lo, hi, step)?;
        let mut rows = Vec::with_capacity((n1 * n2) as usize);
        for j in 0..n2 {
            let x2 = lo[1] + j as f64 * step;
            for i in 0..n1 {
                let x1 = lo[0] + i as f64 * step;
                rows.push(GridPoint { x1, x2, value: self.eval(&[x1, x2])? });
            }
        }
        Ok(rows)
    }

    /// Table of component means and covariances, in build order.
    pub fn component_table(&self) -> Vec<(Vec<f64>, Matrix)> {
        self.mixture.components().iter().map(|c| (c.mean().to_vec(), c.covariance().clone())).collect()
    }
}

impl Objective for SierraFunction {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }
}

/// `(⌊(hi₁-lo₁)/step⌋ + 1, ⌊(hi₂-lo₂)/step⌋ + 1)`, validated.
pub fn grid_shape(lo: [f64; 2], hi: [f64; 2], step: f64) -> Result<(u64, u64)> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("grid step must be positive, got {step}")));
    }
    let mut counts = [0u64; 2];
    for d in 0..2 {
        if !(lo[d].is_finite() && hi[d].is_finite()) || hi[d] < lo[d] {
            return Err(Error::InvalidParameter("grid bounds need lo <= hi".into()));
        }
        // small slack so that e.g. 30/0.25 lands on 120, not 119.999…
        let n = libm::floor((hi[d] - lo[d]) / step + 1e-9) + 1.0;
        if n > MAX_GRID_POINTS as f64 {
            return Err(Error::GridTooLarge(n as u64));
        }
        counts[d] = n as u64;
    }
    let total = counts[0].saturating_mul(counts[1]);
    if total > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge(total));
    }
    Ok((counts[0], counts[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_build_shape() {
        let f = SierraFunction::build(SierraParams::default()).unwrap();
        assert_eq!(f.mixture().len(), 49);
        assert!(f.mixture().weights().iter().all(|&w| w == 1.0 / 49.0));
        let global = &f.mixture().components()[48];
        assert_eq!(global.mean(), &[0.0, 0.0]);
        assert!(global.covariance().max_abs_diff(&Matrix::identity(2).scaled(1.0 / 6.0)) < 1e-15);
    }

    #[test]
    fn first_local_component() {
        // g=[+δ,+δ], p₁=[0,0], s=+σ: mean [2,2], covariance 3·1/6 = 0.5
        let f = SierraFunction::build(SierraParams::default()).unwrap();
        let c = &f.mixture().components()[0];
        assert_eq!(c.mean(), &[2.0, 2.0]);
        assert!(c.covariance().max_abs_diff(&Matrix::identity(2).scaled(0.5)) < 1e-15);
    }

    #[test]
    fn no_decay_shares_covariance() {
        let f = SierraFunction::build(SierraParams { decay: false, ..SierraParams::default() }).unwrap();
        let first = f.mixture().components()[0].covariance().clone();
        assert!(f.mixture().components()[..48].iter().all(|c| *c.covariance() == first));
    }

    #[test]
    fn translation_equivariance() {
        let base = SierraFunction::build(SierraParams::default()).unwrap();
        let moved = SierraFunction::build(SierraParams { center: [10.0, -10.0], ..SierraParams::default() }).unwrap();
        for (a, b) in base.mixture().components().iter().zip(moved.mixture().components()) {
            assert!((b.mean()[0] - a.mean()[0] - 10.0).abs() < 1e-12);
            assert!((b.mean()[1] - a.mean()[1] + 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn far_field_is_tiny_negative_or_zero() {
        let f = SierraFunction::build(SierraParams::default()).unwrap();
        let v = f.eval(&[1e6, 0.0]).unwrap();
        assert!(v <= 0.0 && v > -1e-300);
    }

    #[test]
    fn invalid_params() {
        assert!(SierraFunction::build(SierraParams { sigma: 0.0, ..SierraParams::default() }).is_err());
        assert!(SierraFunction::build(SierraParams { spread_rate: -1.0, ..SierraParams::default() }).is_err());
    }

    #[test]
    fn grid_shape_arithmetic() {
        assert_eq!(grid_shape([-15.0, -15.0], [15.0, 15.0], 0.25).unwrap(), (121, 121));
        assert_eq!(grid_shape([0.0, 0.0], [0.0, 0.0], 1.0).unwrap(), (1, 1));
        assert!(grid_shape([0.0, 0.0], [1.0, 1.0], 0.0).is_err());
        assert!(matches!(grid_shape([0.0, 0.0], [1e4, 1e4], 1.0), Err(Error::GridTooLarge(_))));
    }

    #[test]
    fn degenerate_grid() {
        let f = SierraFunction::build(SierraParams::default()).unwrap();
        let g = f.grid([0.0, 0.0], [0.0, 0.0], 0.5).unwrap();
        assert_eq!(g, vec![GridPoint { x1: 0.0, x2: 0.0, value: f.eval(&[0.0, 0.0]).unwrap() }]);
    }
}
