//! Cross-entropy method optimizers for expensive, multimodal objectives.
//!
//! * [`cem`]: the plain CE-method, a Gaussian-process surrogate variant and
//!   a Gaussian-mixture variant, plus evaluation-budget schedules.
//! * [`distributions`]: dense Gaussians and Gaussian mixtures (sampling,
//!   maximum-likelihood and EM fitting).
//! * [`surrogate`]: zero-mean GP regression with a squared-exponential kernel.
//! * [`sierra`]: a 49-component mixture test objective with a known optimum.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cem;
pub mod distributions;
mod error;
pub mod linalg;
mod rng;
pub mod sierra;
pub mod surrogate;

pub use error::{Error, Result};
pub use rng::RngStream;
