//! Inverse heat equation: a Volterra integral equation of the first kind on
//! `[0, 1]`, discretized by the midpoint rule (the `heat` problem of
//! Hansen's Regularization Tools).

use nalgebra::{DMatrix, DVector};

use super::TestProblem;
use crate::error::{Error, Result};

/// `k(tau) = tau^(-3/2) / (2 kappa sqrt(pi)) exp(-1 / (4 kappa^2 tau))`.
pub fn heat_kernel(tau: f64, kappa: f64) -> f64 {
    tau.powf(-1.5) / (2.0 * kappa * std::f64::consts::PI.sqrt()) * (-1.0 / (4.0 * kappa * kappa * tau)).exp()
}

/// Lower-triangular Toeplitz `H[i][j] = h k((i - j + 1/2) h)`, `h = 1/n`, and
/// the toolbox's true solution (a smooth pulse on the first half).
pub fn heat_problem(n: usize, kappa: f64) -> Result<TestProblem> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("heat problem needs an even n >= 8, got {n}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    let h = 1.0 / n as f64;
    let d: Vec<f64> = (0..n).map(|k| h * heat_kernel((k as f64 + 0.5) * h, kappa)).collect();
    let a = DMatrix::from_fn(n, n, |i, j| if i >= j { d[i - j] } else { 0.0 });

    let mut theta = DVector::zeros(n);
    for i in 1..=n / 2 {
        let ti = i as f64 * 20.0 / n as f64;
        theta[i - 1] = if ti < 2.0 {
            0.75 * ti * ti / 4.0
        } else if ti < 3.0 {
            0.75 + (ti - 2.0) * (3.0 - ti)
        } else {
            0.75 * (-(ti - 3.0) * 2.0).exp()
        };
    }
    Ok(TestProblem::new(format!("heat({n})"), a, theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure() {
        let p = heat_problem(80, 1.0).unwrap();
        let h = &p.h;
        for i in 0..80 {
            for j in 0..80 {
                if j > i {
                    assert_eq!(h[(i, j)], 0.0);
                } else {
                    assert!(h[(i, j)] > 0.0);
                }
            }
        }
        for j in 0..80 {
            let s: f64 = h.column(j).sum();
            assert!(s > 0.0 && s < 1.05, "{s}");
        }
    }

    #[test]
    fn ill_conditioned() {
        // Beyond n ~ 20 the smallest singular values underflow to rounding
        // noise, so the ratio may be infinite.
        let cond = |n| {
            let sv = heat_problem(n, 1.0).unwrap().h.singular_values();
            sv.max() / sv.min()
        };
        assert!(cond(80) > 1e6);
        assert!(cond(8) < cond(12) && cond(12) < cond(20) && cond(20) <= cond(80));
    }

    #[test]
    fn true_solution_shape() {
        let p = heat_problem(80, 1.0).unwrap();
        assert!(p.true_theta.iter().skip(40).all(|v| *v == 0.0));
        let peak = p.true_theta.max();
        assert!(peak > 0.9 && peak <= 1.0, "{peak}");
    }
}
