//! Linear Gaussian model `x = H theta + w`, `w ~ N(0, C)`, and the shrinkage
//! estimators built on its maximum-likelihood solution.
//!
//! The statistic is `u = H' C^-1 x` and `d ln q/du = -Q^+ u = -theta_ML` with
//! `Q = H' C^-1 H`. When `H` is rank deficient `u` lives in `range(H')`, and
//! scores target the projection `P theta` onto that range.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::expfam::{EstimatorMap, Estimator, ExpFamilyModel, LinearEstimator, RiskScore, Subspace};
use crate::rng::SeededRng;

/// Relative singular-value cutoff for the numerical rank.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    h: DMatrix<f64>,
    c: DMatrix<f64>,
    c_chol: Cholesky<f64, Dyn>,
    q: DMatrix<f64>,
    q_pinv: DMatrix<f64>,
    basis: DMatrix<f64>,
    projection: DMatrix<f64>,
    subspace: Option<Subspace>,
}

impl LinearGaussianModel {
    pub fn new(h: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let (n, m) = h.shape();
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("H must be non-empty".into()));
        }
        if c.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.nrows(),
            });
        }
        let asym = (&c - c.transpose()).amax();
        if asym > 1e-12 * (1.0 + c.amax()) {
            return Err(Error::NotPositiveDefinite("noise covariance is not symmetric"));
        }
        let c_chol = Cholesky::new(c.clone())
            .ok_or(Error::NotPositiveDefinite("noise covariance"))?;

        // Whitened operator W = L^-1 H has W'W = Q and the same row space as H.
        let whitened = c_chol
            .l()
            .solve_lower_triangular(&h)
            .ok_or(Error::NotPositiveDefinite("noise covariance"))?;
        let svd = whitened.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
        let smax = svd.singular_values.max();
        let tol = RANK_TOL * smax * n.max(m) as f64;
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tol)
            .collect();
        let r = keep.len();
        if r == 0 {
            return Err(Error::InvalidArgument("H is numerically zero".into()));
        }
        let basis = DMatrix::from_fn(m, r, |i, k| v_t[(keep[k], i)]);
        let inv_s2 = DVector::from_iterator(r, keep.iter().map(|&i| svd.singular_values[i].powi(-2)));
        let q_pinv = &basis * DMatrix::from_diagonal(&inv_s2) * basis.transpose();
        let q = whitened.transpose() * &whitened;
        let projection = &basis * basis.transpose();
        let subspace = if r < m {
            Some(Subspace::new(basis.clone())?)
        } else {
            None
        };
        Ok(Self {
            h,
            c,
            c_chol,
            q,
            q_pinv,
            basis,
            projection,
            subspace,
        })
    }

    /// `C = sigma^2 I`.
    pub fn with_iid_noise(h: DMatrix<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::NotPositiveDefinite("noise variance must be positive"));
        }
        let n = h.nrows();
        Self::new(h, DMatrix::identity(n, n) * sigma2)
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// `Q = H' C^-1 H`.
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn q_pinv(&self) -> &DMatrix<f64> {
        &self.q_pinv
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_full_rank(&self) -> bool {
        self.subspace.is_none()
    }

    /// Orthonormal basis of `range(H')`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Projection onto `range(H')` (the identity when full rank).
    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    fn check_obs(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.h.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.h.nrows(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `C^-1 x`.
    pub fn precision_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.c_chol.solve(x)
    }

    /// `L^-1 x` for `C = L L'`.
    pub fn whiten(&self, x: &DVector<f64>) -> DVector<f64> {
        self.c_chol
            .l()
            .solve_lower_triangular(x)
            .expect("Cholesky factor is nonsingular")
    }

    /// `u = H' C^-1 x`.
    pub fn sufficient_statistic(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_obs(x)?;
        Ok(self.h.transpose() * self.precision_apply(x))
    }

    /// `Q^+ u`.
    pub fn ml_from_stat(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.q_pinv * u
    }

    /// `theta_ML = Q^+ H' C^-1 x`.
    pub fn ml_estimate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.ml_from_stat(&self.sufficient_statistic(x)?))
    }

    /// `(x - H theta)' C^-1 (x - H theta)`.
    pub fn weighted_residual(&self, x: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        self.whiten(&(x - &self.h * theta)).norm_squared()
    }

    /// The ML map `u -> Q^+ u` as a linear estimator.
    pub fn ml_map(&self) -> LinearEstimator {
        LinearEstimator::new(self.q_pinv.clone())
    }

    /// `Tr(Q^+)^2 / Tr(Q^+^2)`.
    pub fn effective_dimension(&self) -> f64 {
        let t = self.q_pinv.trace();
        t * t / (&self.q_pinv * &self.q_pinv).trace()
    }
}

impl ExpFamilyModel for LinearGaussianModel {
    fn dim(&self) -> usize {
        self.h.ncols()
    }

    fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    fn suff_stat(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.sufficient_statistic(x)
    }

    fn grad_log_q(&self, u: &DVector<f64>) -> DVector<f64> {
        -self.ml_from_stat(u)
    }

    fn subspace(&self) -> Option<&Subspace> {
        self.subspace.as_ref()
    }

    fn sample(&self, theta: &DVector<f64>, rng: &mut SeededRng) -> DVector<f64> {
        let z = DVector::from_vec(rng.normal_vec(self.h.nrows()));
        &self.h * theta + self.c_chol.l() * z
    }
}

/// `|P h|^2 + 2 (Tr(P dh/du) - h' theta_ML)` at `u = H' C^-1 x`.
pub fn gaussian_sure(model: &LinearGaussianModel, est: &EstimatorMap<'_>, x: &DVector<f64>) -> Result<RiskScore> {
    let u = model.sufficient_statistic(x)?;
    let h = est.apply(&u);
    let div = match model.subspace() {
        Some(sub) => est.projected_divergence(&u, sub)?,
        None => est.divergence(&u)?,
    };
    let ph = model.projection() * &h;
    let ml = model.ml_from_stat(&u);
    Ok(RiskScore::from_parts(ph.norm_squared(), div, -2.0 * h.dot(&ml)))
}

/// Scaled-ML shrinkage `alpha theta_ML` with `alpha = 1 - Tr(Q^+)/|theta_ML|^2`,
/// as a map of `u`.
#[derive(Debug, Clone)]
pub struct BlindMinimax {
    q_pinv: DMatrix<f64>,
    trace: f64,
    positive_part: bool,
}

impl BlindMinimax {
    pub fn new(model: &LinearGaussianModel, positive_part: bool) -> Self {
        Self {
            q_pinv: model.q_pinv().clone(),
            trace: model.q_pinv().trace(),
            positive_part,
        }
    }

    fn gain(&self, ml_norm2: f64) -> f64 {
        if ml_norm2 == 0.0 {
            return 0.0;
        }
        let alpha = 1.0 - self.trace / ml_norm2;
        if self.positive_part {
            alpha.max(0.0)
        } else {
            alpha
        }
    }
}

impl Estimator for BlindMinimax {
    fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let y = &self.q_pinv * u;
        let alpha = self.gain(y.norm_squared());
        y * alpha
    }

    fn analytic_divergence(&self, u: &DVector<f64>, proj: Option<&DMatrix<f64>>) -> Option<f64> {
        let y = &self.q_pinv * u;
        let s = y.norm_squared();
        if s == 0.0 || (self.positive_part && s <= self.trace) {
            return Some(0.0);
        }
        let c = self.trace;
        // J = (1 - c/s) B + 2c y y' B / s^2 with B = Q^+.
        let (trace_pb, ybpy) = match proj {
            None => (c, y.dot(&(&self.q_pinv * &y))),
            Some(p) => (
                p.transpose().component_mul(&self.q_pinv).sum(),
                y.dot(&(&self.q_pinv * (p * &y))),
            ),
        };
        Some((1.0 - c / s) * trace_pb + 2.0 * c * ybpy / (s * s))
    }
}

/// `alpha theta_ML` with the blind-minimax gain; zero when `theta_ML = 0`.
pub fn blind_minimax(model: &LinearGaussianModel, x: &DVector<f64>, positive_part: bool) -> Result<DVector<f64>> {
    let u = model.sufficient_statistic(x)?;
    Ok(BlindMinimax::new(model, positive_part).apply(&u))
}

/// Componentwise `[1 - sigma_i^2 / x_i^2] x_i`, clamped at zero gain when
/// `positive_part`; `x_i = 0` maps to 0.
pub fn diagonal_shrinkage(x: &[f64], variances: &[f64], positive_part: bool) -> Result<Vec<f64>> {
    if x.len() != variances.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: variances.len(),
        });
    }
    Ok(x.iter()
        .zip(variances)
        .map(|(&xi, &vi)| {
            if xi == 0.0 {
                return 0.0;
            }
            let alpha = 1.0 - vi / (xi * xi);
            let alpha = if positive_part { alpha.max(0.0) } else { alpha };
            alpha * xi
        })
        .collect())
}

/// Reads a matrix stored as `rows cols` followed by row-major entries.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("matrix file: missing {what}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let values: Vec<f64> = tokens
        .map(|t| t.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("matrix file: {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if values.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: values.len(),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn format_matrix(a: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:e}", a[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_matrix(a: &DMatrix<f64>, path: &Path) -> Result<()> {
    std::fs::write(path, format_matrix(a))?;
    Ok(())
}
