//! Orthonormal wavelet transform and coefficient-shrinkage denoising.

mod shrink;
mod transform;

pub use shrink::{
    hard_threshold, mad_sigma, oracle_soft_select, rsure_coeffs, rsure_divergence,
    rsure_select_lambda, rsure_sure_of_lambda, rsure_threshold, scalar_shrink, soft_sure,
    soft_threshold, stein_shrink, sure_soft_select, universal_threshold, RsureSelection,
};
pub use transform::{WaveletBasis, WaveletCoeffs, WaveletFilter};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shrinkage applied to detail coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkageRule {
    /// Leave coefficients untouched.
    Identity,
    /// Soft threshold at a fixed value.
    Soft(f64),
    /// Hard threshold at a fixed value.
    Hard(f64),
    /// Soft threshold chosen by SURE; `cap` limits it to the universal threshold.
    SureShrink { cap: bool },
    /// Hard threshold at the SureShrink threshold.
    HardSure { cap: bool },
    /// Regularized-SURE gains with `lambda` chosen by SURE.
    Rsure,
    /// Hard threshold at the RSURE zero threshold `t(lambda*)`.
    HardRsure,
    /// Soft threshold chosen against the true coefficients.
    OracleSoft,
    /// Componentwise positive-part gains `[1 - sigma^2/c^2]_+`.
    Scalar,
    /// Positive-part Stein gain shared by the band.
    Stein,
}

impl ShrinkageRule {
    pub fn needs_truth(&self) -> bool {
        matches!(self, ShrinkageRule::OracleSoft)
    }
}

/// Whether parameters are chosen per detail level or once for all details.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelPolicy {
    #[default]
    PerLevel,
    Global,
}

/// Denoised signal with the parameter chosen for each processed band
/// (finest first; one entry under [`LevelPolicy::Global`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub signal: Vec<f64>,
    pub params: Vec<f64>,
}

/// Shrink one band; returns the new coefficients and the rule's parameter.
pub fn shrink_band(c: &[f64], rule: ShrinkageRule, sigma: f64, truth: Option<&[f64]>) -> Result<(Vec<f64>, f64)> {
    let sigma2 = sigma * sigma;
    let needs_sigma = !matches!(
        rule,
        ShrinkageRule::Identity | ShrinkageRule::Soft(_) | ShrinkageRule::Hard(_) | ShrinkageRule::OracleSoft
    );
    if needs_sigma && !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("noise level must be positive, got {sigma}")));
    }
    Ok(match rule {
        ShrinkageRule::Identity => (c.to_vec(), 0.0),
        ShrinkageRule::Soft(t) => (soft_threshold(c, t), t),
        ShrinkageRule::Hard(t) => (hard_threshold(c, t), t),
        ShrinkageRule::SureShrink { cap } => {
            let t = sure_soft_select(c, sigma, cap);
            (soft_threshold(c, t), t)
        }
        ShrinkageRule::HardSure { cap } => {
            let t = sure_soft_select(c, sigma, cap);
            (hard_threshold(c, t), t)
        }
        ShrinkageRule::Rsure => {
            let sel = rsure_select_lambda(c, sigma2);
            (sel.estimate, sel.lambda)
        }
        ShrinkageRule::HardRsure => {
            let sel = rsure_select_lambda(c, sigma2);
            let t = rsure_threshold(sigma2, sel.lambda);
            (hard_threshold(c, t), t)
        }
        ShrinkageRule::OracleSoft => {
            let truth = truth.ok_or_else(|| {
                Error::InvalidArgument("oracle shrinkage needs the true coefficients".into())
            })?;
            if truth.len() != c.len() {
                return Err(Error::DimensionMismatch {
                    expected: c.len(),
                    got: truth.len(),
                });
            }
            let t = oracle_soft_select(c, truth);
            (soft_threshold(c, t), t)
        }
        ShrinkageRule::Scalar => (scalar_shrink(c, sigma2), 0.0),
        ShrinkageRule::Stein => (stein_shrink(c, sigma2), 0.0),
    })
}

/// Transform, shrink the detail bands (approximation untouched), invert.
///
/// `truth` is the clean signal; it is only consulted by oracle rules.
pub fn denoise(
    signal: &[f64],
    basis: &WaveletBasis,
    rule: ShrinkageRule,
    sigma: f64,
    policy: LevelPolicy,
    truth: Option<&[f64]>,
) -> Result<Denoised> {
    let mut coeffs = basis.dwt(signal)?;
    let truth_coeffs = match truth {
        Some(t) if rule.needs_truth() => Some(basis.dwt(t)?),
        _ => None,
    };
    if rule.needs_truth() && truth_coeffs.is_none() {
        return Err(Error::InvalidArgument("oracle shrinkage needs the clean signal".into()));
    }
    let params = match policy {
        LevelPolicy::PerLevel => {
            let mut params = Vec::with_capacity(coeffs.details.len());
            for (j, band) in coeffs.details.iter_mut().enumerate() {
                let tb = truth_coeffs.as_ref().map(|t| t.details[j].as_slice());
                let (out, p) = shrink_band(band, rule, sigma, tb)?;
                *band = out;
                params.push(p);
            }
            params
        }
        LevelPolicy::Global => {
            let flat: Vec<f64> = coeffs.details.concat();
            let tflat = truth_coeffs.as_ref().map(|t| t.details.concat());
            let (out, p) = shrink_band(&flat, rule, sigma, tflat.as_deref())?;
            let mut offset = 0;
            for band in coeffs.details.iter_mut() {
                let len = band.len();
                band.copy_from_slice(&out[offset..offset + len]);
                offset += len;
            }
            vec![p]
        }
    };
    Ok(Denoised {
        signal: basis.idwt(&coeffs)?,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn identity_rules_reproduce_input() {
        let mut rng = SeededRng::new(3);
        let x = rng.normal_vec(256);
        let basis = WaveletBasis::new(WaveletFilter::Db4, 5);
        for rule in [ShrinkageRule::Identity, ShrinkageRule::Soft(0.0), ShrinkageRule::Hard(0.0)] {
            let y = denoise(&x, &basis, rule, 1.0, LevelPolicy::PerLevel, None).unwrap();
            for (a, b) in x.iter().zip(&y.signal) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn smooth_signal_survives_sure_rules() {
        let n = 1024;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                5.0 * (2.0 * std::f64::consts::PI * t).sin() + 2.0 * (6.0 * std::f64::consts::PI * t).cos()
            })
            .collect();
        let energy = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let basis = WaveletBasis::new(WaveletFilter::Db4, 5);
        for rule in [
            ShrinkageRule::SureShrink { cap: true },
            ShrinkageRule::Rsure,
            ShrinkageRule::Scalar,
            ShrinkageRule::Stein,
        ] {
            let y = denoise(&x, &basis, rule, 1e-3, LevelPolicy::PerLevel, None).unwrap();
            let mse = x.iter().zip(&y.signal).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
            assert!(mse <= 1e-4 * energy, "{rule:?}: {mse}");
        }
    }

    #[test]
    fn global_policy_returns_one_parameter() {
        let mut rng = SeededRng::new(5);
        let x = rng.normal_vec(512);
        let basis = WaveletBasis::new(WaveletFilter::Db4, 4);
        let y = denoise(&x, &basis, ShrinkageRule::Rsure, 1.0, LevelPolicy::Global, None).unwrap();
        assert_eq!(y.params.len(), 1);
    }

    #[test]
    fn oracle_requires_truth() {
        let basis = WaveletBasis::new(WaveletFilter::Db4, 2);
        let x = vec![1.0; 16];
        assert!(denoise(&x, &basis, ShrinkageRule::OracleSoft, 1.0, LevelPolicy::PerLevel, None).is_err());
    }
}
