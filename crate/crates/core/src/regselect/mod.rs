//! Regularization-parameter selection for penalized least squares
//! `(x - H theta)' C^-1 (x - H theta) + lambda R(L theta)`.
//!
//! Tikhonov (`R = |.|^2`) is linear in `u`, so its SURE divergence and GCV
//! trace are exact. Nonlinear solvers (the l1 penalty) are scored with a
//! Monte-Carlo divergence that re-runs the solver on perturbed statistics.

mod search;
pub mod spectral;

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use search::{golden_section, minimize_on_grid, GridMinimum, LambdaGrid};

use crate::error::{Error, Result};
use crate::expfam::divergence::{default_mc_step, try_mc_divergence_along};
use crate::expfam::{ExpFamilyModel, LinearEstimator};
use crate::gaussian::LinearGaussianModel;
use crate::numfmt::fmt12;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    SquaredL2,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Sure,
    Gcv,
    Discrepancy,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selector::Sure => "sure",
            Selector::Gcv => "gcv",
            Selector::Discrepancy => "discrepancy",
        })
    }
}

/// Golden-section stopping width on `ln lambda`.
pub const DEFAULT_REFINE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub lambda_star: f64,
    pub estimate: DVector<f64>,
    /// Grid evaluations in lambda order: the score for SURE/GCV, the residual
    /// minus its target for the discrepancy principle.
    pub score_curve: Vec<(f64, f64)>,
    pub selector: Selector,
    pub boundary: bool,
    pub warnings: Vec<String>,
}

impl SelectionResult {
    /// `lambda,score,selector` rows with twelve significant digits.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("lambda,score,selector\n");
        for (l, s) in &self.score_curve {
            out.push_str(&format!("{},{},{}\n", fmt12(*l), fmt12(*s), self.selector));
        }
        out
    }
}

/// A linear Gaussian model with a regularization operator and lambda grid.
#[derive(Debug, Clone)]
pub struct PenalizedProblem {
    model: LinearGaussianModel,
    l: DMatrix<f64>,
    ltl: DMatrix<f64>,
    penalty: Penalty,
    grid: LambdaGrid,
}

impl PenalizedProblem {
    pub fn new(model: LinearGaussianModel, l: DMatrix<f64>, penalty: Penalty, grid: LambdaGrid) -> Result<Self> {
        if l.ncols() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: l.ncols(),
            });
        }
        let ltl = l.transpose() * &l;
        let prob = Self {
            model,
            l,
            ltl,
            penalty,
            grid,
        };
        if penalty == Penalty::SquaredL2 {
            prob.system(grid.min)?;
        }
        Ok(prob)
    }

    /// Grid `[1e-6, 1e3] * Tr(Q)/m`, ten points per decade.
    pub fn default_grid(model: &LinearGaussianModel) -> LambdaGrid {
        LambdaGrid::scaled_default(model.q().trace() / model.dim() as f64)
    }

    pub fn model(&self) -> &LinearGaussianModel {
        &self.model
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn grid(&self) -> &LambdaGrid {
        &self.grid
    }

    fn require_l2(&self) -> Result<()> {
        if self.penalty != Penalty::SquaredL2 {
            return Err(Error::InvalidArgument("operation needs the squared-l2 penalty".into()));
        }
        Ok(())
    }

    /// Cholesky factor of `Q + lambda L'L`.
    fn system(&self, lambda: f64) -> Result<Cholesky<f64, Dyn>> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
        }
        let a = self.model.q() + &self.ltl * lambda;
        let chol = Cholesky::new(a).ok_or(Error::DegenerateRegularization { lambda })?;
        // Cholesky can succeed on matrices that are singular to rounding.
        let diag = chol.l_dirty().diagonal();
        let (dmin, dmax) = (diag.min(), diag.max());
        if !(dmin > 1e-12 * dmax) {
            return Err(Error::DegenerateRegularization { lambda });
        }
        Ok(chol)
    }

    /// `(Q + lambda L'L)^-1`.
    pub fn tikhonov_inverse(&self, lambda: f64) -> Result<DMatrix<f64>> {
        self.require_l2()?;
        Ok(self.system(lambda)?.inverse())
    }

    /// The Tikhonov map `u -> (Q + lambda L'L)^-1 u`.
    pub fn tikhonov_estimator(&self, lambda: f64) -> Result<LinearEstimator> {
        Ok(LinearEstimator::new(self.tikhonov_inverse(lambda)?))
    }

    /// `theta = (Q + lambda L'L)^-1 u` for a given statistic.
    pub fn tikhonov_from_stat(&self, u: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
        self.require_l2()?;
        let chol = self.system(lambda)?;
        let theta = chol.solve(u);
        let a = self.model.q() + &self.ltl * lambda;
        let res = (&a * &theta - u).norm();
        if res > 1e-8 * (1.0 + u.norm()) {
            return Err(Error::DegenerateRegularization { lambda });
        }
        Ok(theta)
    }

    pub fn tikhonov_solve(&self, x: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
        let u = self.model.sufficient_statistic(x)?;
        self.tikhonov_from_stat(&u, lambda)
    }

    /// `|x - H theta|^2` (unweighted).
    pub fn residual(&self, x: &DVector<f64>, theta: &DVector<f64>) -> f64 {
        (x - self.model.h() * theta).norm_squared()
    }

    /// `|x - H theta|^2 / (n - Tr((Q + lambda L'L)^-1 Q))^2`.
    pub fn gcv_score(&self, x: &DVector<f64>, lambda: f64) -> Result<f64> {
        let inv = self.tikhonov_inverse(lambda)?;
        let u = self.model.sufficient_statistic(x)?;
        let theta = &inv * u;
        let n = self.model.obs_dim() as f64;
        let dof = inv.transpose().component_mul(self.model.q()).sum();
        let denom = n - dof;
        if denom.abs() <= 1e-12 * n {
            return Err(Error::GcvDegenerate { lambda });
        }
        Ok(self.residual(x, &theta) / (denom * denom))
    }

    /// `|P theta|^2 + 2 Tr(P (Q + lambda L'L)^-1) - 2 theta' theta_ML`.
    pub fn sure_score_tikhonov(&self, x: &DVector<f64>, lambda: f64) -> Result<f64> {
        let inv = self.tikhonov_inverse(lambda)?;
        let u = self.model.sufficient_statistic(x)?;
        let theta = &inv * &u;
        let p = self.model.projection();
        let ml = self.model.ml_from_stat(&u);
        let trace = p.transpose().component_mul(&inv).sum();
        Ok((p * &theta).norm_squared() + 2.0 * trace - 2.0 * theta.dot(&ml))
    }

    /// SURE with a Monte-Carlo divergence of `u -> solver(u, lambda)`.
    ///
    /// Probes are Rademacher vectors (restricted to `range(H')` for
    /// rank-deficient models) drawn from `SeededRng::new(seed)`; a solver
    /// failure on a perturbed statistic is reported with its probe index.
    pub fn mc_sure_score_nonlinear<S>(&self, x: &DVector<f64>, solver: &S, lambda: f64, probes: usize, seed: u64) -> Result<f64>
    where
        S: Fn(&DVector<f64>, f64) -> Result<DVector<f64>> + ?Sized,
    {
        let u = self.model.sufficient_statistic(x)?;
        self.mc_sure_from_stat(&u, solver, lambda, probes, seed)
    }

    pub fn mc_sure_from_stat<S>(&self, u: &DVector<f64>, solver: &S, lambda: f64, probes: usize, seed: u64) -> Result<f64>
    where
        S: Fn(&DVector<f64>, f64) -> Result<DVector<f64>> + ?Sized,
    {
        let h = solver(u, lambda)?;
        let apply = |v: &DVector<f64>| solver(v, lambda);
        let basis = self.model.subspace().map(|s| s.basis());
        let mut rng = SeededRng::new(seed);
        let div = try_mc_divergence_along(&apply, u, basis, probes, default_mc_step(u), &mut rng)?;
        let ml = self.model.ml_from_stat(u);
        Ok((self.model.projection() * &h).norm_squared() + 2.0 * div - 2.0 * h.dot(&ml))
    }

    /// Tikhonov selection by SURE or GCV with grid scan and refinement.
    pub fn select_lambda(&self, x: &DVector<f64>, selector: Selector, rel_tol: f64) -> Result<SelectionResult> {
        self.require_l2()?;
        let u = self.model.sufficient_statistic(x)?;
        let solver = |v: &DVector<f64>, l: f64| self.tikhonov_from_stat(v, l);
        match selector {
            Selector::Sure => select_by_score(&self.grid, |l| self.sure_score_tikhonov(x, l), &|l| solver(&u, l), selector, rel_tol),
            Selector::Gcv => select_by_score(&self.grid, |l| self.gcv_score(x, l), &|l| solver(&u, l), selector, rel_tol),
            Selector::Discrepancy => {
                let sigma2 = self.model.c().trace() / self.model.obs_dim() as f64;
                self.discrepancy_select(x, &|l| solver(&u, l), sigma2)
            }
        }
    }

    /// Finds `lambda` with `|x - H theta(lambda)|^2 = n sigma^2` by bisection
    /// on `ln lambda` inside the largest grid bracket.
    pub fn discrepancy_select<S>(&self, x: &DVector<f64>, solver: &S, sigma2: f64) -> Result<SelectionResult>
    where
        S: Fn(f64) -> Result<DVector<f64>> + Sync + ?Sized,
    {
        let target = self.model.obs_dim() as f64 * sigma2;
        let gap = |l: f64| -> Result<f64> { Ok(self.residual(x, &solver(l)?) - target) };
        discrepancy_search(&self.grid, gap, target, solver)
    }
}

/// Grid scan plus golden-section refinement of an arbitrary score, with the
/// estimate recomputed at the selected lambda.
pub fn select_by_score<F, S>(grid: &LambdaGrid, score: F, solver: &S, selector: Selector, rel_tol: f64) -> Result<SelectionResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
    S: Fn(f64) -> Result<DVector<f64>> + ?Sized,
{
    let min = minimize_on_grid(grid, score, rel_tol)?;
    let mut warnings = Vec::new();
    if min.boundary {
        warnings.push(format!(
            "boundary-solution: {selector} minimum at lambda = {} on the grid edge or flat curve",
            fmt12(min.lambda)
        ));
    }
    Ok(SelectionResult {
        lambda_star: min.lambda,
        estimate: solver(min.lambda)?,
        score_curve: min.curve,
        selector,
        boundary: min.boundary,
        warnings,
    })
}

/// Relative residual gap at which bisection stops.
pub const DISCREPANCY_TOL: f64 = 1e-3;

/// Discrepancy root search given `gap(lambda) = residual - target`.
pub fn discrepancy_search<G, S>(grid: &LambdaGrid, gap: G, target: f64, solver: &S) -> Result<SelectionResult>
where
    G: Fn(f64) -> Result<f64> + Sync,
    S: Fn(f64) -> Result<DVector<f64>> + ?Sized,
{
    let points = grid.points();
    let values: Vec<f64> = points.par_iter().map(|&l| gap(l)).collect::<Result<_>>()?;
    let curve: Vec<(f64, f64)> = points.iter().copied().zip(values.iter().copied()).collect();
    let mut warnings = Vec::new();
    let tol = 1e-9 * (1.0 + target);
    if values.windows(2).any(|w| w[1] < w[0] - tol) {
        warnings.push("residual is not monotone in lambda on the grid; using the largest bracket".to_string());
    }
    let bracket = (0..points.len() - 1).rev().find(|&i| values[i] <= 0.0 && values[i + 1] >= 0.0);
    let Some(i) = bracket else {
        let closest = (0..points.len())
            .min_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()))
            .map(|k| points[k])
            .unwrap_or(grid.min);
        return Err(Error::DiscrepancyUnbracketed { closest });
    };
    let (mut lo, mut hi) = (points[i].ln(), points[i + 1].ln());
    let (mut glo, mut ghi) = (values[i], values[i + 1]);
    let scale = target.abs().max(f64::MIN_POSITIVE);
    let mut lambda = if glo.abs() <= ghi.abs() { lo } else { hi };
    for _ in 0..200 {
        if glo.abs().min(ghi.abs()) <= DISCREPANCY_TOL * scale || hi - lo < 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g = gap(mid.exp())?;
        if g <= 0.0 {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
            ghi = g;
        }
        lambda = if glo.abs() <= ghi.abs() { lo } else { hi };
    }
    let lambda_star = lambda.exp();
    Ok(SelectionResult {
        lambda_star,
        estimate: solver(lambda_star)?,
        score_curve: curve,
        selector: Selector::Discrepancy,
        boundary: false,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::{mc_unbiasedness_check, sure_score, EstimatorMap};

    fn identity_problem(m: usize) -> PenalizedProblem {
        let model = LinearGaussianModel::new(DMatrix::identity(m, m), DMatrix::identity(m, m)).unwrap();
        PenalizedProblem::new(model, DMatrix::identity(m, m), Penalty::SquaredL2, LambdaGrid::new(1e-3, 1e3, 10).unwrap()).unwrap()
    }

    fn random_problem(seed: u64, n: usize, m: usize, sigma2: f64) -> PenalizedProblem {
        let mut rng = SeededRng::new(seed);
        let h = DMatrix::from_fn(n, m, |_, _| rng.normal());
        let model = LinearGaussianModel::with_iid_noise(h, sigma2).unwrap();
        let grid = PenalizedProblem::default_grid(&model);
        PenalizedProblem::new(model, DMatrix::identity(m, m), Penalty::SquaredL2, grid).unwrap()
    }

    #[test]
    fn identity_closed_forms() {
        let prob = identity_problem(3);
        let x = DVector::from_vec(vec![1.0, -2.0, 4.0]);
        let th = prob.tikhonov_solve(&x, 0.5).unwrap();
        assert!((th - &x / 1.5).amax() < 1e-14);
        let g = prob.gcv_score(&x, 0.7).unwrap();
        assert!((g - x.norm_squared() / 9.0).abs() < 1e-12);
        let one = identity_problem(1);
        let s = one.sure_score_tikhonov(&DVector::from_vec(vec![2.0]), 1.0).unwrap();
        assert!((s + 2.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_zero_is_ml_and_sure_closed_form() {
        let prob = random_problem(1, 7, 4, 0.5);
        let mut rng = SeededRng::new(2);
        let x = DVector::from_vec(rng.normal_vec(7));
        let ml = prob.model().ml_estimate(&x).unwrap();
        assert!((prob.tikhonov_solve(&x, 0.0).unwrap() - &ml).amax() < 1e-10);
        let s = prob.sure_score_tikhonov(&x, 0.0).unwrap();
        let expected = 2.0 * prob.model().q_pinv().trace() - ml.norm_squared();
        assert!((s - expected).abs() < 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn norm_decreases_with_lambda() {
        let prob = random_problem(3, 6, 6, 1.0);
        let x = DVector::from_vec(SeededRng::new(4).normal_vec(6));
        let norms: Vec<f64> = prob.grid().points().iter().map(|&l| prob.tikhonov_solve(&x, l).unwrap().norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn sure_matches_core_score() {
        let prob = random_problem(5, 8, 5, 0.8);
        let mut rng = SeededRng::new(6);
        for _ in 0..5 {
            let x = DVector::from_vec(rng.normal_vec(8));
            let u = prob.model().sufficient_statistic(&x).unwrap();
            for lambda in [0.01, 0.3, 4.0] {
                let est = prob.tikhonov_estimator(lambda).unwrap();
                let core = sure_score(prob.model(), &EstimatorMap::analytic(&est), &u).unwrap().score;
                let direct = prob.sure_score_tikhonov(&x, lambda).unwrap();
                assert!((core - direct).abs() < 1e-10 * (1.0 + core.abs()));
            }
        }
    }

    #[test]
    fn sure_derivative_matches_analytic() {
        // d/dl of |theta|^2 + 2 Tr(A^-1) - 2 theta' ml with A = Q + l I:
        // dtheta/dl = -A^-1 theta, dTr(A^-1)/dl = -Tr(A^-2).
        let prob = random_problem(7, 6, 6, 1.0);
        let x = DVector::from_vec(SeededRng::new(8).normal_vec(6));
        let u = prob.model().sufficient_statistic(&x).unwrap();
        let ml = prob.model().ml_from_stat(&u);
        for lambda in [0.05, 0.5, 5.0] {
            let inv = prob.tikhonov_inverse(lambda).unwrap();
            let th = &inv * &u;
            let dth = -(&inv * &th);
            let analytic = 2.0 * th.dot(&dth) - 2.0 * (&inv * &inv).trace() - 2.0 * dth.dot(&ml);
            let h = 1e-5 * lambda;
            let fd = (prob.sure_score_tikhonov(&x, lambda + h).unwrap() - prob.sure_score_tikhonov(&x, lambda - h).unwrap()) / (2.0 * h);
            assert!((fd - analytic).abs() <= 1e-4 * analytic.abs().max(1e-8), "{fd} {analytic}");
        }
    }

    #[test]
    fn flat_gcv_flags_boundary() {
        let prob = identity_problem(4);
        let x = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let r = prob.select_lambda(&x, Selector::Gcv, DEFAULT_REFINE_TOL).unwrap();
        assert!(r.boundary);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn selection_estimate_is_recomputed() {
        let prob = random_problem(9, 10, 6, 0.3);
        let x = DVector::from_vec(SeededRng::new(10).normal_vec(10));
        for sel in [Selector::Sure, Selector::Gcv] {
            let r = prob.select_lambda(&x, sel, DEFAULT_REFINE_TOL).unwrap();
            assert_eq!(r.estimate, prob.tikhonov_solve(&x, r.lambda_star).unwrap());
        }
    }

    #[test]
    fn discrepancy_identity_root() {
        let prob = identity_problem(3);
        let x = DVector::from_vec(vec![3.0, -4.0, 12.0]); // |x|^2 = 169
        let sigma2 = 2.0;
        let r = prob.discrepancy_select(&x, &|l| prob.tikhonov_solve(&x, l), sigma2).unwrap();
        // (l/(1+l))^2 |x|^2 = 3 sigma^2.
        let ratio = (3.0 * sigma2 / 169.0f64).sqrt();
        let root = ratio / (1.0 - ratio);
        assert!((r.lambda_star - root).abs() / root < 5e-3, "{} {root}", r.lambda_star);
        assert_eq!(r.estimate, prob.tikhonov_solve(&x, r.lambda_star).unwrap());
    }

    #[test]
    fn discrepancy_unbracketed_on_noiseless_data() {
        let prob = random_problem(11, 8, 8, 1.0);
        let theta = DVector::from_element(8, 0.01);
        let x = prob.model().h() * theta;
        let err = prob.discrepancy_select(&x, &|l| prob.tikhonov_solve(&x, l), 1.0).unwrap_err();
        assert!(matches!(err, Error::DiscrepancyUnbracketed { .. }));
    }

    #[test]
    fn mc_sure_tracks_analytic_for_tikhonov() {
        let prob = random_problem(12, 8, 6, 1.0);
        let x = DVector::from_vec(SeededRng::new(13).normal_vec(8)) * 3.0;
        let solver = |u: &DVector<f64>, l: f64| prob.tikhonov_from_stat(u, l);
        for lambda in [0.1, 1.0] {
            let mc = prob.mc_sure_score_nonlinear(&x, &solver, lambda, 64, 7).unwrap();
            let exact = prob.sure_score_tikhonov(&x, lambda).unwrap();
            assert!((mc - exact).abs() <= 0.03 * exact.abs(), "{mc} {exact}");
        }
    }

    #[test]
    fn probe_failure_carries_index() {
        let prob = random_problem(14, 5, 5, 1.0);
        let x = DVector::from_vec(SeededRng::new(15).normal_vec(5));
        let u0 = prob.model().sufficient_statistic(&x).unwrap();
        let solver = move |u: &DVector<f64>, _l: f64| {
            if u == &u0 {
                Ok(u.clone())
            } else {
                Err(Error::NonConverged { iters: 1, residual: 1.0 })
            }
        };
        let err = prob.mc_sure_score_nonlinear(&x, &solver, 1.0, 4, 1).unwrap_err();
        assert!(matches!(err, Error::ProbeFailure { probe: 0, .. }));
    }

    #[test]
    fn tikhonov_unbiased_small_instance() {
        let prob = random_problem(16, 8, 5, 0.5);
        let est = prob.tikhonov_estimator(1.0).unwrap();
        let theta = DVector::from_vec(vec![1.0, -0.5, 2.0, 0.0, 0.7]);
        let r = mc_unbiasedness_check(prob.model(), &theta, &EstimatorMap::analytic(&est), 20_000, 3).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn curve_csv_header() {
        let prob = identity_problem(2);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let r = prob.select_lambda(&x, Selector::Sure, DEFAULT_REFINE_TOL).unwrap();
        let csv = r.curve_csv();
        assert!(csv.starts_with("lambda,score,selector\n0.001,"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",sure"));
    }
}
