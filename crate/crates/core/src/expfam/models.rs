//! Bundled exponential-family instantiations beyond the linear Gaussian model.

use nalgebra::DVector;
use rand_distr::{Distribution, Gamma};

use super::ExpFamilyModel;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// `x = theta + w`, `w ~ N(0, sigma^2 I)`; `u = x / sigma^2`,
/// `d ln q/du = -sigma^2 u = -x`.
#[derive(Debug, Clone, Copy)]
pub struct IidGaussian {
    dim: usize,
    sigma2: f64,
}

impl IidGaussian {
    pub fn new(dim: usize, sigma2: f64) -> Result<Self> {
        if dim == 0 || !(sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "iid Gaussian needs m >= 1 and sigma^2 > 0 (got m = {dim}, sigma^2 = {sigma2})"
            )));
        }
        Ok(Self { dim, sigma2 })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

impl ExpFamilyModel for IidGaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn obs_dim(&self) -> usize {
        self.dim
    }

    fn suff_stat(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(x / self.sigma2)
    }

    fn grad_log_q(&self, u: &DVector<f64>) -> DVector<f64> {
        -u * self.sigma2
    }

    fn sample(&self, theta: &DVector<f64>, rng: &mut SeededRng) -> DVector<f64> {
        let sd = self.sigma2.sqrt();
        theta.map(|t| t + sd * rng.normal())
    }
}

/// Scalar gamma observation with known shape `k > 1` and natural parameter
/// `eta < 0` (rate `-eta`): density proportional to `x^(k-1) exp(eta x)`, so
/// `u = x` and `d ln q/du = (k - 1)/u`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarGamma {
    shape: f64,
}

impl ScalarGamma {
    pub fn new(shape: f64) -> Result<Self> {
        if !(shape >= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma shape must be >= 1, got {shape}")));
        }
        Ok(Self { shape })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }
}

impl ExpFamilyModel for ScalarGamma {
    fn dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn suff_stat(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: x.len() });
        }
        Ok(x.clone())
    }

    fn grad_log_q(&self, u: &DVector<f64>) -> DVector<f64> {
        u.map(|v| (self.shape - 1.0) / v)
    }

    fn sample(&self, theta: &DVector<f64>, rng: &mut SeededRng) -> DVector<f64> {
        let rate = -theta[0];
        assert!(rate > 0.0, "gamma natural parameter must be negative");
        let dist = Gamma::new(self.shape, 1.0 / rate).expect("valid gamma parameters");
        DVector::from_element(1, dist.sample(rng))
    }
}
