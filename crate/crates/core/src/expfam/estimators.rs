//! Estimators written as maps of the sufficient statistic `u`.

use nalgebra::{DMatrix, DVector};

use super::Estimator;

/// `h(u) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroEstimator;

impl Estimator for ZeroEstimator {
    fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(u.len())
    }

    fn analytic_divergence(&self, _u: &DVector<f64>, _proj: Option<&DMatrix<f64>>) -> Option<f64> {
        Some(0.0)
    }
}

/// `h(u) = A u`.
#[derive(Debug, Clone)]
pub struct LinearEstimator {
    matrix: DMatrix<f64>,
}

impl LinearEstimator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square(), "linear estimator must map R^m to R^m");
        Self { matrix }
    }

    /// `h(u) = s u`; with `s = sigma^2` this is the identity on `x` in the iid
    /// Gaussian model.
    pub fn scaled_identity(m: usize, scale: f64) -> Self {
        Self::new(DMatrix::identity(m, m) * scale)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl Estimator for LinearEstimator {
    fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u
    }

    fn analytic_divergence(&self, _u: &DVector<f64>, proj: Option<&DMatrix<f64>>) -> Option<f64> {
        Some(match proj {
            None => self.matrix.trace(),
            // Tr(P A) without forming the product.
            Some(p) => p.transpose().component_mul(&self.matrix).sum(),
        })
    }
}

/// Componentwise soft threshold of the rescaled statistic:
/// `h_i(u) = sign(s u_i) max(|s u_i| - t, 0)`.
///
/// At the kinks `|s u_i| = t` the derivative is taken from above.
#[derive(Debug, Clone, Copy)]
pub struct SoftThresholdEstimator {
    threshold: f64,
    scale: f64,
}

impl SoftThresholdEstimator {
    pub fn new(threshold: f64, scale: f64) -> Self {
        assert!(threshold >= 0.0, "threshold must be nonnegative");
        Self { threshold, scale }
    }

    fn slope(&self, v: f64) -> f64 {
        if v >= self.threshold || v < -self.threshold {
            1.0
        } else {
            0.0
        }
    }
}

impl Estimator for SoftThresholdEstimator {
    fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        u.map(|ui| {
            let v = self.scale * ui;
            v.signum() * (v.abs() - self.threshold).max(0.0)
        })
    }

    fn analytic_divergence(&self, u: &DVector<f64>, proj: Option<&DMatrix<f64>>) -> Option<f64> {
        Some(
            u.iter()
                .enumerate()
                .map(|(i, &ui)| {
                    let weight = proj.map_or(1.0, |p| p[(i, i)]);
                    weight * self.scale * self.slope(self.scale * ui)
                })
                .sum(),
        )
    }
}

/// Stein's estimate for the iid Gaussian model with variance `sigma2`,
/// `(1 - m sigma^2 / |x|^2) x` with `x = sigma^2 u`, optionally clamped to a
/// nonnegative gain.
#[derive(Debug, Clone, Copy)]
pub struct SteinEstimator {
    sigma2: f64,
    positive_part: bool,
}

impl SteinEstimator {
    pub fn new(sigma2: f64, positive_part: bool) -> Self {
        assert!(sigma2 > 0.0);
        Self {
            sigma2,
            positive_part,
        }
    }

    fn gain(&self, x: &DVector<f64>) -> f64 {
        let n2 = x.norm_squared();
        if n2 == 0.0 {
            return 0.0;
        }
        let alpha = 1.0 - x.len() as f64 * self.sigma2 / n2;
        if self.positive_part {
            alpha.max(0.0)
        } else {
            alpha
        }
    }
}

impl Estimator for SteinEstimator {
    fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let x = u * self.sigma2;
        let alpha = self.gain(&x);
        x * alpha
    }

    fn analytic_divergence(&self, u: &DVector<f64>, proj: Option<&DMatrix<f64>>) -> Option<f64> {
        let x = u * self.sigma2;
        let n2 = x.norm_squared();
        let m = x.len() as f64;
        let c = m * self.sigma2;
        if n2 == 0.0 || (self.positive_part && n2 <= c) {
            return Some(0.0);
        }
        let alpha = 1.0 - c / n2;
        // dh/du = sigma^2 [alpha I + 2 c x x' / |x|^4]
        let (trace_p, xpx) = match proj {
            None => (m, n2),
            Some(p) => (p.trace(), x.dot(&(p * &x))),
        };
        Some(self.sigma2 * (alpha * trace_p + 2.0 * c * xpx / (n2 * n2)))
    }
}
