//! Divergence `Tr(dh/du)` of an estimator map, evaluated without an
//! analytic Jacobian.
//!
//! Central finite differences visit every coordinate (or every basis vector
//! of a subspace) and are exact for affine maps up to rounding. The
//! Monte-Carlo probe uses Rademacher directions `b` and the forward quotient
//! `b' (h(u + eps b) - h(u)) / eps`, averaged over probes.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Default central-difference step: `1e-5 (1 + |u|_inf)`.
pub fn default_fd_step(u: &DVector<f64>) -> f64 {
    1e-5 * (1.0 + u.amax())
}

/// Default Monte-Carlo probe step: `1e-4 (1 + |u|_inf)`.
pub fn default_mc_step(u: &DVector<f64>) -> f64 {
    1e-4 * (1.0 + u.amax())
}

fn checked<F>(apply: &F, u: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + ?Sized,
{
    let h = apply(u)?;
    if h.iter().all(|v| v.is_finite()) {
        Ok(h)
    } else {
        Err(Error::NondifferentiablePoint)
    }
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("divergence step must be positive, got {step}")))
    }
}

/// Central-difference divergence along the columns of `directions`
/// (orthonormal). With `directions = I` this is the plain trace.
pub fn try_fd_divergence_along<F>(
    apply: &F,
    u: &DVector<f64>,
    directions: Option<&DMatrix<f64>>,
    step: f64,
) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + ?Sized,
{
    check_step(step)?;
    let m = u.len();
    let count = directions.map_or(m, |v| v.ncols());
    let mut total = 0.0;
    for j in 0..count {
        let dir = match directions {
            Some(v) => v.column(j).into_owned(),
            None => {
                let mut e = DVector::zeros(m);
                e[j] = 1.0;
                e
            }
        };
        let plus = checked(apply, &(u + &dir * step))?;
        let minus = checked(apply, &(u - &dir * step))?;
        total += dir.dot(&(plus - minus)) / (2.0 * step);
    }
    finite(total)
}

fn finite(d: f64) -> Result<f64> {
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::NondifferentiablePoint)
    }
}

/// Monte-Carlo divergence with Rademacher probes. When `directions` (an
/// `m x r` orthonormal basis) is given, probes are `V z` with `z` in `{-1,1}^r`,
/// which estimates `Tr(P dh/du)` for `P = V V'`.
pub fn try_mc_divergence_along<F>(
    apply: &F,
    u: &DVector<f64>,
    directions: Option<&DMatrix<f64>>,
    probes: usize,
    step: f64,
    rng: &mut SeededRng,
) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + ?Sized,
{
    check_step(step)?;
    if probes == 0 {
        return Err(Error::InvalidArgument("mc_divergence needs at least one probe".into()));
    }
    let m = u.len();
    let base = checked(apply, u)?;
    let mut total = 0.0;
    for probe in 0..probes {
        let b = match directions {
            Some(v) => {
                let z = DVector::from_fn(v.ncols(), |_, _| rng.sign());
                v * z
            }
            None => DVector::from_fn(m, |_, _| rng.sign()),
        };
        let shifted = checked(apply, &(u + &b * step)).map_err(|e| match e {
            Error::NondifferentiablePoint => e,
            other => Error::ProbeFailure {
                probe,
                source: Box::new(other),
            },
        })?;
        total += b.dot(&(shifted - &base)) / step;
    }
    finite(total / probes as f64)
}

/// `sum_i [h_i(u + step e_i) - h_i(u - step e_i)] / (2 step)`.
pub fn fd_divergence<F>(apply: F, u: &DVector<f64>, step: f64) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    try_fd_divergence_along(&|v: &DVector<f64>| Ok(apply(v)), u, None, step)
}

/// Rademacher-probe estimate of `Tr(dh/du)`; deterministic given `rng`.
pub fn mc_divergence<F>(
    apply: F,
    u: &DVector<f64>,
    probes: usize,
    step: f64,
    rng: &mut SeededRng,
) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    try_mc_divergence_along(&|v: &DVector<f64>| Ok(apply(v)), u, None, probes, step, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::soft_threshold;

    #[test]
    fn fd_linear_scale() {
        let u = DVector::from_vec(vec![0.3, -1.0, 2.0, 5.0]);
        let d = fd_divergence(|v| v * 3.0, &u, 1e-3).unwrap();
        assert!((d - 12.0).abs() < 1e-8);
    }

    #[test]
    fn fd_square() {
        let u = DVector::from_vec(vec![1.0, 2.0]);
        let d = fd_divergence(|v| v.map(|x| x * x), &u, 1e-5).unwrap();
        assert!((d - 6.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn fd_soft_threshold_counts_active() {
        let t = 0.5;
        let u = DVector::from_vec(vec![2.0, -3.0, 0.1, 0.7, -0.2, 1.5]);
        let step = 1e-5;
        let d = fd_divergence(|v| DVector::from_vec(soft_threshold(v.as_slice(), t)), &u, step)
            .unwrap();
        let expected = u.iter().filter(|x| x.abs() > t + step).count() as f64;
        assert!((d - expected).abs() < 1e-8, "{d} vs {expected}");
    }

    #[test]
    fn fd_rejects_nonfinite() {
        let u = DVector::from_vec(vec![0.0]);
        let err = fd_divergence(|v| v.map(|x| 1.0 / x), &u, 1e-300).unwrap_err();
        assert!(matches!(err, Error::NondifferentiablePoint));
    }

    #[test]
    fn mc_identity_is_exact_for_one_probe() {
        let u = DVector::from_vec(vec![0.5, -2.0, 1.0, 4.0, 0.0]);
        let mut rng = SeededRng::new(3);
        let d = mc_divergence(|v| v.clone(), &u, 1, 1e-4, &mut rng).unwrap();
        assert!((d - 5.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn mc_zero_map() {
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let mut rng = SeededRng::new(1);
        let d = mc_divergence(|v| DVector::zeros(v.len()), &u, 8, 1e-4, &mut rng).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn mc_linear_map_within_two_percent() {
        let mut rng = SeededRng::new(2024);
        let m = 6;
        // Diagonally dominant so the trace is well away from zero.
        let a = DMatrix::from_fn(m, m, |i, j| {
            let z = rng.normal();
            if i == j {
                3.0 + z.abs()
            } else {
                0.3 * z
            }
        });
        let trace = a.trace();
        let u = DVector::from_fn(m, |_, _| rng.normal());
        let mut probe_rng = SeededRng::new(99);
        let d = mc_divergence(|v| &a * v, &u, 64, 1e-4, &mut probe_rng).unwrap();
        assert!(((d - trace) / trace).abs() < 0.02, "{d} vs {trace}");
    }

    #[test]
    fn projected_fd_matches_trace_of_p_a() {
        let mut rng = SeededRng::new(5);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.normal());
        let v = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.6, 0.8, 0.0]);
        let p = &v * v.transpose();
        let u = &v * DVector::from_vec(vec![0.3, -0.4]);
        let d = try_fd_divergence_along(&|x: &DVector<f64>| Ok(&a * x), &u, Some(&v), 1e-4)
            .unwrap();
        assert!((d - (&p * &a).trace()).abs() < 1e-9);
    }
}
