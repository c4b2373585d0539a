//! Stein-type unbiased risk estimation for continuous exponential families.
//!
//! A model has density `r(x) exp(theta' phi(x) - g(theta))` with sufficient
//! statistic `u = phi(x)`. For any weakly differentiable `h(u)`,
//!
//! ```text
//! E{h(u)' theta} = -E{Tr(dh/du)} - E{h(u)' d ln q(u)/du}
//! ```
//!
//! so `|h|^2 + 2 Tr(dh/du) + 2 h' d ln q/du` is unbiased for
//! `E|h - theta|^2 - |theta|^2`. Scores here never include the unknown
//! `|theta|^2`; selections are made on score differences.
//!
//! When `u` lives in a subspace with orthonormal basis `V` (projection
//! `P = V V'`), the projected score `|P h|^2 + 2 Tr(P dh/du) + 2 h' V d ln q/du'`
//! is unbiased for `E|P h - P theta|^2 - |P theta|^2`. Models report the
//! gradient already lifted to ambient coordinates (`V d ln q/du'`), so both
//! forms share one gradient hook.

mod check;
pub mod divergence;
pub mod estimators;
pub mod models;

use nalgebra::{DMatrix, DVector};

pub use check::{mc_unbiasedness_check, UnbiasednessReport};
pub use divergence::{fd_divergence, mc_divergence};
pub use estimators::{LinearEstimator, SoftThresholdEstimator, SteinEstimator, ZeroEstimator};
pub use models::{IidGaussian, ScalarGamma};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Orthonormal basis `V` of the subspace containing the statistic, plus `P = V V'`.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
    projection: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let r = basis.ncols();
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::<f64>::identity(r, r)).amax();
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "subspace basis is not orthonormal (|V'V - I| = {err:e})"
            )));
        }
        let projection = &basis * basis.transpose();
        Ok(Self { basis, projection })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// `|u - P u|`.
    pub fn distance(&self, u: &DVector<f64>) -> f64 {
        (u - &self.projection * u).norm()
    }
}

/// Observation model in exponential-family form.
pub trait ExpFamilyModel: Sync {
    /// Length `m` of the natural parameter.
    fn dim(&self) -> usize;

    /// Length `n` of an observation.
    fn obs_dim(&self) -> usize;

    /// `u = phi(x)`.
    fn suff_stat(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// `d ln q(u)/du`, lifted to ambient coordinates when the statistic lives
    /// in a subspace.
    fn grad_log_q(&self, u: &DVector<f64>) -> DVector<f64>;

    /// `None` when the statistic spans all of `R^m`.
    fn subspace(&self) -> Option<&Subspace> {
        None
    }

    /// Draw one observation `x` under natural parameter `theta`.
    fn sample(&self, theta: &DVector<f64>, rng: &mut SeededRng) -> DVector<f64>;
}

/// An estimate `h(u)`, optionally with a closed-form divergence.
pub trait Estimator: Sync {
    fn apply(&self, u: &DVector<f64>) -> DVector<f64>;

    /// `Tr(P dh/du)` in closed form, with `proj = None` meaning `P = I`.
    fn analytic_divergence(&self, _u: &DVector<f64>, _proj: Option<&DMatrix<f64>>) -> Option<f64> {
        None
    }
}

/// How an [`EstimatorMap`] evaluates its divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceBackend {
    Analytic,
    /// Central differences with step `1e-5 (1 + |u|_inf)` unless given.
    FiniteDifference { step: Option<f64> },
    /// Rademacher probes with step `1e-4 (1 + |u|_inf)` unless given; the
    /// probe stream is reseeded from `seed` on every call.
    MonteCarlo {
        probes: usize,
        step: Option<f64>,
        seed: u64,
    },
}

/// An estimator bundled with the divergence backend used to score it.
#[derive(Clone, Copy)]
pub struct EstimatorMap<'a> {
    estimator: &'a dyn Estimator,
    backend: DivergenceBackend,
}

impl<'a> EstimatorMap<'a> {
    pub fn new(estimator: &'a dyn Estimator, backend: DivergenceBackend) -> Self {
        Self { estimator, backend }
    }

    pub fn analytic(estimator: &'a dyn Estimator) -> Self {
        Self::new(estimator, DivergenceBackend::Analytic)
    }

    pub fn backend(&self) -> DivergenceBackend {
        self.backend
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        self.estimator.apply(u)
    }

    /// `Tr(dh/du)`.
    pub fn divergence(&self, u: &DVector<f64>) -> Result<f64> {
        self.divergence_in(u, None)
    }

    /// `Tr(P dh/du)` for the subspace projection.
    pub fn projected_divergence(&self, u: &DVector<f64>, subspace: &Subspace) -> Result<f64> {
        self.divergence_in(u, Some(subspace))
    }

    fn divergence_in(&self, u: &DVector<f64>, subspace: Option<&Subspace>) -> Result<f64> {
        let apply = |v: &DVector<f64>| Ok(self.estimator.apply(v));
        let basis = subspace.map(Subspace::basis);
        match self.backend {
            DivergenceBackend::Analytic => self
                .estimator
                .analytic_divergence(u, subspace.map(Subspace::projection))
                .ok_or_else(|| {
                    Error::InvalidArgument("estimator has no analytic divergence".into())
                }),
            DivergenceBackend::FiniteDifference { step } => {
                let step = step.unwrap_or_else(|| divergence::default_fd_step(u));
                divergence::try_fd_divergence_along(&apply, u, basis, step)
            }
            DivergenceBackend::MonteCarlo { probes, step, seed } => {
                let step = step.unwrap_or_else(|| divergence::default_mc_step(u));
                let mut rng = SeededRng::new(seed);
                divergence::try_mc_divergence_along(&apply, u, basis, probes, step, &mut rng)
            }
        }
    }
}

/// A SURE value with its parts; `score = fidelity + 2 divergence + cross`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskScore {
    pub score: f64,
    pub divergence_term: f64,
    /// `|h|^2`, or `|P h|^2` in the projected form.
    pub fidelity_term: f64,
    /// `2 h' d ln q/du`.
    pub cross_term: f64,
}

impl RiskScore {
    pub fn from_parts(fidelity_term: f64, divergence_term: f64, cross_term: f64) -> Self {
        Self {
            score: fidelity_term + 2.0 * divergence_term + cross_term,
            divergence_term,
            fidelity_term,
            cross_term,
        }
    }
}

fn checked_gradient<M: ExpFamilyModel + ?Sized>(model: &M, u: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: u.len(),
        });
    }
    if let Some(sub) = model.subspace() {
        let distance = sub.distance(u);
        if distance > 1e-8 * (1.0 + u.norm()) {
            return Err(Error::SubspaceViolation { distance });
        }
    }
    let grad = model.grad_log_q(u);
    if grad.iter().all(|g| g.is_finite()) {
        Ok(grad)
    } else {
        Err(Error::ModelSingularity)
    }
}

/// Unbiased estimate of `E{h(u)' theta}`: `-Tr(dh/du) - h(u)' d ln q/du`.
pub fn stein_cross_term<M: ExpFamilyModel + ?Sized>(
    model: &M,
    est: &EstimatorMap<'_>,
    u: &DVector<f64>,
) -> Result<f64> {
    let grad = checked_gradient(model, u)?;
    let h = est.apply(u);
    Ok(-est.divergence(u)? - h.dot(&grad))
}

/// `|h|^2 + 2 Tr(dh/du) + 2 h' d ln q/du`.
pub fn sure_score<M: ExpFamilyModel + ?Sized>(
    model: &M,
    est: &EstimatorMap<'_>,
    u: &DVector<f64>,
) -> Result<RiskScore> {
    let grad = checked_gradient(model, u)?;
    let h = est.apply(u);
    let div = est.divergence(u)?;
    Ok(RiskScore::from_parts(h.norm_squared(), div, 2.0 * h.dot(&grad)))
}

/// `|P h|^2 + 2 Tr(P dh/du) + 2 h' V d ln q/du'`.
pub fn projected_sure_score<M: ExpFamilyModel + ?Sized>(
    model: &M,
    est: &EstimatorMap<'_>,
    u: &DVector<f64>,
) -> Result<RiskScore> {
    let sub = model.subspace().ok_or(Error::FullRankModel)?;
    let grad = checked_gradient(model, u)?;
    let h = est.apply(u);
    let div = est.projected_divergence(u, sub)?;
    let ph = sub.projection() * &h;
    Ok(RiskScore::from_parts(ph.norm_squared(), div, 2.0 * h.dot(&grad)))
}

/// Projected score when the model has a subspace, plain score otherwise.
pub fn risk_score<M: ExpFamilyModel + ?Sized>(
    model: &M,
    est: &EstimatorMap<'_>,
    u: &DVector<f64>,
) -> Result<RiskScore> {
    if model.subspace().is_some() {
        projected_sure_score(model, est, u)
    } else {
        sure_score(model, est, u)
    }
}
