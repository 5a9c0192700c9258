use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::surrogate::GaussianProcessModel;

/// A function to minimize.
///
/// Implementations that are `Sync` may be shared across parallel runs.
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// The surrogate's posterior mean as an objective. Predictions never touch
/// the true-evaluation counter.
impl Objective for GaussianProcessModel {
    fn dim(&self) -> usize {
        GaussianProcessModel::dim(self)
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.predict_one(x).unwrap_or(f64::NAN)
    }
}

/// Wraps an objective and counts calls; rejects NaN inputs and outputs.
pub struct CountingObjective<O> {
    inner: O,
    calls: usize,
}

impl<O: Objective> CountingObjective<O> {
    pub fn new(inner: O) -> Self {
        CountingObjective { inner, calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn call(&mut self, x: &[f64]) -> Result<f64> {
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter(alloc::format!("NaN input {x:?}")));
        }
        self.calls += 1;
        let y = self.inner.evaluate(x);
        if y.is_nan() {
            return Err(Error::ObjectiveNan(x.to_vec()));
        }
        Ok(y)
    }

    pub fn call_all<'a, I>(&mut self, xs: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        xs.into_iter().map(|x| self.call(x)).collect()
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}
