//! Generalized Stein unbiased risk estimation.
//!
//! * [`expfam`]: the risk identity for continuous exponential families, its
//!   projected form for rank-deficient models, and divergence backends.
//! * [`gaussian`]: the linear Gaussian model and SURE-driven shrinkage.
//! * [`regselect`]: regularization-parameter selection (SURE, GCV, discrepancy).
//! * [`sparse`]: the l1-penalized least-squares solver.
//! * [`wavelet`]: orthonormal wavelets and shrinkage denoising.
//! * [`problems`]: reproducible test problems.
//! * [`experiments`]: the experiment drivers behind the `gsure` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expfam;
pub mod gaussian;
pub mod numfmt;
pub mod problems;
pub mod regselect;
pub mod rng;
pub mod experiments;
pub mod sparse;
pub mod wavelet;

pub use error::{Error, Result};
pub use rng::SeededRng;
