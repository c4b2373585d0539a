use nalgebra::DVector;
use rayon::prelude::*;

use super::{risk_score, EstimatorMap, ExpFamilyModel};
use crate::error::Result;
use crate::rng::SeededRng;

/// Monte-Carlo comparison of the mean SURE score against the empirical risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasednessReport {
    pub trials: usize,
    pub mean_score: f64,
    /// `|theta|^2`, or `|P theta|^2` for subspace models.
    pub theta_energy: f64,
    /// Mean of `|h - theta|^2` (projected for subspace models).
    pub empirical_mse: f64,
    /// Standard error of the per-trial gap `score + |theta|^2 - loss`.
    pub std_err: f64,
    pub z: f64,
    pub pass: bool,
}

impl UnbiasednessReport {
    pub fn gap(&self) -> f64 {
        self.mean_score + self.theta_energy - self.empirical_mse
    }
}

/// Draws `trials` observations under `theta` (trial `i` uses
/// `SeededRng::derive(seed, i)`), scores the estimator on each, and compares
/// with the realized loss. Passes when `|z| <= 4`.
pub fn mc_unbiasedness_check<M: ExpFamilyModel + ?Sized>(
    model: &M,
    theta: &DVector<f64>,
    est: &EstimatorMap<'_>,
    trials: usize,
    seed: u64,
) -> Result<UnbiasednessReport> {
    let project = |v: &DVector<f64>| match model.subspace() {
        Some(sub) => sub.projection() * v,
        None => v.clone(),
    };
    let p_theta = project(theta);
    let theta_energy = p_theta.norm_squared();

    let per_trial: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::derive(seed, i as u64);
            let x = model.sample(theta, &mut rng);
            let u = model.suff_stat(&x)?;
            let score = risk_score(model, est, &u)?.score;
            let loss = (project(&est.apply(&u)) - &p_theta).norm_squared();
            Ok((score, loss))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per_trial.len() as f64;
    let mean_score = per_trial.iter().map(|p| p.0).sum::<f64>() / n;
    let empirical_mse = per_trial.iter().map(|p| p.1).sum::<f64>() / n;
    let gaps: Vec<f64> = per_trial.iter().map(|(s, l)| s + theta_energy - l).collect();
    let mean_gap = gaps.iter().sum::<f64>() / n;
    let var = gaps.iter().map(|g| (g - mean_gap).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let std_err = (var / n).sqrt();
    let scale = 1.0 + empirical_mse.abs() + theta_energy;
    let z = if std_err > 1e-14 * scale {
        mean_gap / std_err
    } else if mean_gap.abs() <= 1e-10 * scale {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(UnbiasednessReport {
        trials,
        mean_score,
        theta_energy,
        empirical_mse,
        std_err,
        z,
        pass: z.abs() <= 4.0,
    })
}
