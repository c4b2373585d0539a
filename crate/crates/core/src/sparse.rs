//! l1-penalized least squares with a second-difference penalty,
//!
//! ```text
//! min (x - H theta)' C^-1 (x - H theta) + lambda |L theta|_1
//! ```
//!
//! written in terms of the statistic `u = H' C^-1 x` as
//! `theta' Q theta - 2 u' theta + lambda |L theta|_1` (the constant
//! `x' C^-1 x` dropped).
//!
//! Substituting `theta = A c + M d`, where `A = [1, ramp]` spans the null
//! space of `L` and `M` is the right inverse of `L` built from hinge
//! sequences (`L A = 0`, `L M = I`), gives `L theta = d`: a lasso in `d` with
//! two unpenalized coefficients `c`. That lasso is solved exactly by the
//! feature-sign active-set method: fix a sign pattern, solve the equality
//! QP on the active set, and line-search back to the first sign change.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expfam::ExpFamilyModel;
use crate::gaussian::LinearGaussianModel;
use crate::numfmt::fmt12;

/// Second-order difference operator, `(m - 2) x m`, stencil `(1, -2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOp2 {
    m: usize,
}

impl DiffOp2 {
    pub fn new(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidArgument(format!("second differences need m >= 3, got {m}")));
        }
        Ok(Self { m })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> usize {
        self.m - 2
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m - 2, self.m, |i, j| match j.wrapping_sub(i) {
            0 | 2 => 1.0,
            1 => -2.0,
            _ => 0.0,
        })
    }

    pub fn apply(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.m - 2, |i, _| theta[i] - 2.0 * theta[i + 1] + theta[i + 2])
    }

    /// `L' w`.
    pub fn apply_t(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for i in 0..self.m - 2 {
            out[i] += w[i];
            out[i + 1] -= 2.0 * w[i];
            out[i + 2] += w[i];
        }
        out
    }

    /// `[1, ramp]`, a basis of the null space.
    pub fn null_basis(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, 2, |i, j| if j == 0 { 1.0 } else { i as f64 })
    }

    /// Column `k` is the hinge `max(i - k - 1, 0)`.
    pub fn right_inverse(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m - 2, |i, k| (i as f64 - k as f64 - 1.0).max(0.0))
    }

    /// `M' g` by reverse cumulative sums.
    fn right_inverse_t(&self, g: &DVector<f64>) -> DVector<f64> {
        // (M' g)_k = sum_{i >= k+2} (i - k - 1) g_i
        let m = self.m;
        let mut out = DVector::zeros(m - 2);
        let (mut s1, mut s2) = (0.0, 0.0); // sum g_i and running weighted sum
        for k in (0..m - 2).rev() {
            s1 += g[k + 2];
            s2 += s1;
            out[k] = s2;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iters: usize,
    /// KKT residual the returned solution must meet.
    pub rel_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            rel_tol: 1e-8,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument("solver settings need rel_tol > 0 and max_iters >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// `theta' Q theta - 2 u' theta + lambda |L theta|_1`.
    pub objective: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Solution {
    pub theta: DVector<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub log: Vec<IterRecord>,
}

impl L1Solution {
    /// `iter,objective,kkt_residual` rows.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("iter,objective,kkt_residual\n");
        for r in &self.log {
            out.push_str(&format!("{},{},{}\n", r.iter, fmt12(r.objective), fmt12(r.kkt_residual)));
        }
        out
    }
}

/// Entries of `L theta` at or below this relative size count as zero.
const ZERO_TOL: f64 = 1e-9;

/// `theta' Q theta - 2 u' theta + lambda |L theta|_1`.
pub fn reduced_objective(q: &DMatrix<f64>, u: &DVector<f64>, l: &DiffOp2, lambda: f64, theta: &DVector<f64>) -> f64 {
    theta.dot(&(q * theta)) - 2.0 * u.dot(theta) + lambda * l.apply(theta).lp_norm(1)
}

/// `(x - H theta)' C^-1 (x - H theta) + lambda |L theta|_1`.
pub fn objective_value(model: &LinearGaussianModel, l: &DiffOp2, x: &DVector<f64>, lambda: f64, theta: &DVector<f64>) -> f64 {
    model.weighted_residual(x, theta) + lambda * l.apply(theta).lp_norm(1)
}

/// Normalized distance from `-grad` of the smooth part to
/// `lambda L' d|.|_1(L theta)`.
///
/// The subgradient on the zero set of `L theta` is taken as
/// `clip(-(M' g)/lambda, -1, 1)`, which is the exact multiplier at an
/// optimum; elsewhere the value is an upper bound on the distance.
pub fn kkt_residual_from_stat(q: &DMatrix<f64>, u: &DVector<f64>, l: &DiffOp2, lambda: f64, theta: &DVector<f64>) -> f64 {
    let g = (q * theta - u) * 2.0;
    let gnorm = g.norm();
    if lambda == 0.0 {
        return gnorm / (1.0 + gnorm);
    }
    let lt = l.apply(theta);
    let zero = ZERO_TOL * (1.0 + theta.amax());
    let free = l.right_inverse_t(&g);
    let w = DVector::from_fn(lt.len(), |i, _| {
        if lt[i].abs() > zero {
            lt[i].signum()
        } else {
            (-free[i] / lambda).clamp(-1.0, 1.0)
        }
    });
    let r = g + l.apply_t(&w) * lambda;
    r.norm() / (1.0 + gnorm)
}

pub fn kkt_residual(model: &LinearGaussianModel, l: &DiffOp2, x: &DVector<f64>, lambda: f64, theta: &DVector<f64>) -> Result<f64> {
    let u = model.sufficient_statistic(x)?;
    Ok(kkt_residual_from_stat(model.q(), &u, l, lambda, theta))
}

/// Active-set solver for one model and difference operator.
#[derive(Debug, Clone)]
pub struct L1Solver {
    l: DiffOp2,
    q: DMatrix<f64>,
    null_basis: DMatrix<f64>,
    hinges: DMatrix<f64>,
    settings: SolverSettings,
}

impl L1Solver {
    pub fn new(model: &LinearGaussianModel, l: DiffOp2, settings: SolverSettings) -> Result<Self> {
        settings.validate()?;
        let m = model.dim();
        if l.size() != m {
            return Err(Error::DimensionMismatch { expected: m, got: l.size() });
        }
        let q = model.q().clone();
        let null_basis = l.null_basis();
        // The fit must determine the affine part: H injective on {1, ramp}.
        let gaa = null_basis.transpose() * &q * &null_basis;
        let ok = Cholesky::new(gaa.clone()).is_some() && gaa.determinant() > 1e-12 * gaa[(0, 0)] * gaa[(1, 1)];
        if !ok {
            return Err(Error::InvalidArgument(
                "forward operator annihilates an affine sequence; the l1 problem has no unique solution".into(),
            ));
        }
        Ok(Self {
            hinges: l.right_inverse(),
            l,
            q,
            null_basis,
            settings,
        })
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn diff_op(&self) -> &DiffOp2 {
        &self.l
    }

    /// Orthonormal basis of the piecewise-linear sequences with kinks
    /// only on `support`.
    fn support_basis(&self, support: &[bool]) -> DMatrix<f64> {
        let m = self.l.size();
        let kinks: Vec<usize> = (0..m - 2).filter(|&k| support[k]).collect();
        let mut basis = DMatrix::zeros(m, 2 + kinks.len());
        basis.columns_mut(0, 2).copy_from(&self.null_basis);
        for (j, &k) in kinks.iter().enumerate() {
            basis.set_column(2 + j, &self.hinges.column(k));
        }
        basis.qr().q()
    }

    /// Projects `theta` onto the sequences whose second differences vanish
    /// off `support`; returns it with its second differences (exact zeros
    /// off the support).
    fn snap(&self, theta: &DVector<f64>, support: &[bool]) -> (DVector<f64>, DVector<f64>) {
        let ortho = self.support_basis(support);
        let theta = &ortho * (ortho.transpose() * theta);
        let mut d = self.l.apply(&theta);
        for (k, on) in support.iter().enumerate() {
            if !on {
                d[k] = 0.0;
            }
        }
        (theta, d)
    }

    /// Smallest `lambda` at which the solution is affine (`L theta = 0`):
    /// the sup-norm of the hinge gradient at the affine least-squares fit.
    pub fn critical_lambda(&self, u: &DVector<f64>) -> f64 {
        let a = &self.null_basis;
        let coef = solve_spd(a.transpose() * &self.q * a, &(a.transpose() * u));
        let g = (&self.q * (a * coef) - u) * 2.0;
        self.l.right_inverse_t(&g).amax()
    }

    /// Jacobian of `u -> theta(u)` at a solution: on the support of
    /// `L theta` the map is affine with slope `U (U' Q U)^-1 U'`, `U` an
    /// orthonormal basis of the sequences kinked only there.
    pub fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let zero = ZERO_TOL * (1.0 + theta.amax());
        let support: Vec<bool> = self.l.apply(theta).iter().map(|v| v.abs() > zero).collect();
        let ortho = self.support_basis(&support);
        let reduced = ortho.transpose() * &self.q * &ortho;
        let k = reduced.nrows();
        let mut inv = DMatrix::identity(k, k);
        for j in 0..k {
            let col = solve_spd(reduced.clone(), &inv.column(j).into_owned());
            inv.set_column(j, &col);
        }
        &ortho * inv * ortho.transpose()
    }

    pub fn solve(&self, model: &LinearGaussianModel, x: &DVector<f64>, lambda: f64) -> Result<L1Solution> {
        let u = model.sufficient_statistic(x)?;
        self.solve_from_stat(&u, lambda, None)
    }

    /// Solves from the statistic `u`, optionally warm-started at `warm`.
    pub fn solve_from_stat(&self, u: &DVector<f64>, lambda: f64, warm: Option<&DVector<f64>>) -> Result<L1Solution> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
        }
        let m = self.l.size();
        if u.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: u.len() });
        }
        let (mut theta, mut d) = match warm {
            Some(w) if w.len() == m => {
                let zero = ZERO_TOL * (1.0 + w.amax());
                let support: Vec<bool> = self.l.apply(w).iter().map(|v| v.abs() > zero).collect();
                self.snap(w, &support)
            }
            Some(w) => return Err(Error::DimensionMismatch { expected: m, got: w.len() }),
            None => (DVector::zeros(m), DVector::zeros(m - 2)),
        };

        let mut log = Vec::new();
        let mut record = |iter: usize, theta: &DVector<f64>| -> f64 {
            let kkt = kkt_residual_from_stat(&self.q, u, &self.l, lambda, theta);
            let objective = reduced_objective(&self.q, u, &self.l, lambda, theta);
            log.push(IterRecord { iter, objective, kkt_residual: kkt });
            kkt
        };
        let mut kkt = record(0, &theta);
        // The free affine part is never optimal at the start.
        let mut resolve = true;

        for iter in 1..=self.settings.max_iters {
            let mut signs: Vec<f64> = d.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() }).collect();
            if !resolve {
                let g = (&self.q * &theta - u) * 2.0;
                let gd = self.l.right_inverse_t(&g);
                let slack = 1e-10 * (lambda + gd.amax()) + f64::MIN_POSITIVE;
                let cand = (0..m - 2)
                    .filter(|&k| signs[k] == 0.0)
                    .max_by(|&a, &b| gd[a].abs().total_cmp(&gd[b].abs()));
                match cand {
                    Some(k) if gd[k].abs() > lambda + slack => signs[k] = -gd[k].signum(),
                    _ => {
                        return if kkt <= self.settings.rel_tol {
                            Ok(L1Solution {
                                theta,
                                iterations: iter - 1,
                                kkt_residual: kkt,
                                log,
                            })
                        } else {
                            Err(Error::NonConverged { iters: iter - 1, residual: kkt })
                        };
                    }
                }
            }
            let (next, truncated) = self.feature_sign_step(u, lambda, &theta, &d, &signs);
            theta = next.0;
            d = next.1;
            resolve = truncated;
            kkt = record(iter, &theta);
        }
        Err(Error::NonConverged {
            iters: self.settings.max_iters,
            residual: kkt,
        })
    }

    /// Minimizes the smooth objective plus `lambda s' L theta` over
    /// piecewise-linear `theta` with kinks on the signed set, then moves from
    /// the current point toward that minimizer and stops at the best
    /// sign-change point. Returns the new `(theta, L theta)` and whether the
    /// support needs another solve.
    fn feature_sign_step(
        &self,
        u: &DVector<f64>,
        lambda: f64,
        theta: &DVector<f64>,
        d: &DVector<f64>,
        signs: &[f64],
    ) -> ((DVector<f64>, DVector<f64>), bool) {
        let m = self.l.size();
        let active: Vec<usize> = (0..m - 2).filter(|&k| signs[k] != 0.0).collect();
        let support: Vec<bool> = signs.iter().map(|&v| v != 0.0).collect();
        // An orthonormal basis keeps the reduced system as well conditioned
        // as Q allows.
        let ortho = self.support_basis(&support);
        let s = DVector::from_column_slice(signs);
        let rhs = ortho.transpose() * (u - self.l.apply_t(&s) * (0.5 * lambda));
        let reduced = ortho.transpose() * &self.q * &ortho;
        let target = &ortho * solve_spd(reduced, &rhs);

        let d_target = {
            let mut dt = self.l.apply(&target);
            for k in 0..m - 2 {
                if !support[k] {
                    dt[k] = 0.0;
                }
            }
            dt
        };
        let objective = |th: &DVector<f64>, dv: &DVector<f64>| -> f64 {
            th.dot(&(&self.q * th)) - 2.0 * u.dot(th) + lambda * dv.lp_norm(1)
        };

        let mut best_t = 1.0;
        let mut best_val = objective(&target, &d_target);
        let mut best_zero = None;
        for &k in &active {
            let (from, to) = (d[k], d_target[k]);
            if from != 0.0 && from.signum() != to.signum() {
                let t = from / (from - to);
                let th = theta + (&target - theta) * t;
                let mut dv = d + (&d_target - d) * t;
                dv[k] = 0.0;
                let v = objective(&th, &dv);
                if v < best_val {
                    best_val = v;
                    best_t = t;
                    best_zero = Some(k);
                }
            }
        }
        let mut support = support;
        if let Some(k) = best_zero {
            support[k] = false;
        }
        let moved = theta + (&target - theta) * best_t;
        let (theta, d) = self.snap(&moved, &support);
        // The step is optimal for its support only if no sign flipped.
        let consistent = active.iter().all(|&k| d[k] == 0.0 || d[k].signum() == signs[k]);
        ((theta, d), best_zero.is_some() || !consistent)
    }
}

/// Solves an SPD system, falling back to a pseudo-inverse when the Cholesky
/// factorization breaks down.
fn solve_spd(a: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        let x = chol.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return x;
        }
    }
    let eps = 1e-14 * a.amax();
    a.svd(true, true).solve(rhs, eps).expect("SVD computed with both factors")
}

/// Solves `min (x - H theta)' C^-1 (x - H theta) + lambda |L theta|_1`.
pub fn solve_l1_pen(model: &LinearGaussianModel, l: &DiffOp2, x: &DVector<f64>, lambda: f64, settings: SolverSettings) -> Result<L1Solution> {
    L1Solver::new(model, *l, settings)?.solve(model, x, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::expfam::ExpFamilyModel;

    fn random_model(seed: u64, n: usize, m: usize) -> LinearGaussianModel {
        let mut rng = SeededRng::new(seed);
        let h = DMatrix::from_fn(n, m, |_, _| rng.normal());
        LinearGaussianModel::with_iid_noise(h, 1.0).unwrap()
    }

    #[test]
    fn diff_op_identities() {
        let l = DiffOp2::new(9).unwrap();
        let lm = l.matrix();
        assert!((&lm * l.null_basis()).amax() == 0.0);
        assert_eq!(&lm * l.right_inverse(), DMatrix::identity(7, 7));
        for i in 0..7 {
            assert_eq!(lm.row(i).sum(), 0.0);
        }
        let g = DVector::from_vec(SeededRng::new(1).normal_vec(9));
        assert!((l.right_inverse_t(&g) - l.right_inverse().transpose() * &g).amax() < 1e-12);
        let w = DVector::from_vec(SeededRng::new(2).normal_vec(7));
        assert!((l.apply_t(&w) - lm.transpose() * &w).amax() < 1e-12);
    }

    #[test]
    fn lambda_zero_is_ml() {
        let model = random_model(3, 12, 8);
        let x = DVector::from_vec(SeededRng::new(4).normal_vec(12));
        let sol = solve_l1_pen(&model, &DiffOp2::new(model.dim()).unwrap(), &x, 0.0, SolverSettings::default()).unwrap();
        let ml = model.ml_estimate(&x).unwrap();
        assert!((sol.theta - ml).amax() < 1e-6);
    }

    #[test]
    fn huge_lambda_gives_affine_fit() {
        let model = random_model(5, 12, 8);
        let x = DVector::from_vec(SeededRng::new(6).normal_vec(12));
        let sol = solve_l1_pen(&model, &DiffOp2::new(model.dim()).unwrap(), &x, 1e8, SolverSettings::default()).unwrap();
        let a = DiffOp2::new(8).unwrap().null_basis();
        let ha = model.h() * &a;
        let coef = (ha.transpose() * &ha).lu().solve(&(ha.transpose() * &x)).unwrap();
        assert!((sol.theta - &a * coef).amax() < 1e-6);
    }

    #[test]
    fn matches_sign_pattern_enumeration() {
        // Independent oracle: for m = 6 enumerate every sign/zero pattern of
        // L theta, solve the equality-constrained QP, keep consistent ones.
        let m = 6;
        let model = random_model(7, 9, m);
        let l = DiffOp2::new(m).unwrap();
        let lm = l.matrix();
        let mut rng = SeededRng::new(8);
        for &lambda in &[0.3, 2.0, 10.0] {
            let x = DVector::from_vec(rng.normal_vec(9)) * 2.0;
            let u = model.sufficient_statistic(&x).unwrap();
            let sol = solve_l1_pen(&model, &DiffOp2::new(model.dim()).unwrap(), &x, lambda, SolverSettings::default()).unwrap();
            let mut best = f64::INFINITY;
            for code in 0..3usize.pow((m - 2) as u32) {
                let mut pattern = vec![0i32; m - 2];
                let mut c = code;
                for p in pattern.iter_mut() {
                    *p = (c % 3) as i32 - 1;
                    c /= 3;
                }
                let zeros: Vec<usize> = (0..m - 2).filter(|&i| pattern[i] == 0).collect();
                let s = DVector::from_fn(m - 2, |i, _| pattern[i] as f64);
                let rhs_top = u.clone() * 2.0 - lm.transpose() * &s * lambda;
                let kz = zeros.len();
                let mut kkt = DMatrix::zeros(m + kz, m + kz);
                kkt.view_mut((0, 0), (m, m)).copy_from(&(model.q() * 2.0));
                for (r, &z) in zeros.iter().enumerate() {
                    for j in 0..m {
                        kkt[(m + r, j)] = lm[(z, j)];
                        kkt[(j, m + r)] = lm[(z, j)];
                    }
                }
                let mut rhs = DVector::zeros(m + kz);
                rhs.rows_mut(0, m).copy_from(&rhs_top);
                let Some(solz) = kkt.lu().solve(&rhs) else { continue };
                let th = solz.rows(0, m).into_owned();
                let lt = &lm * &th;
                let consistent = (0..m - 2).all(|i| pattern[i] == 0 || lt[i] * pattern[i] as f64 >= -1e-12);
                if consistent {
                    best = best.min(reduced_objective(model.q(), &u, &l, lambda, &th));
                }
            }
            let got = reduced_objective(model.q(), &u, &l, lambda, &sol.theta);
            assert!((got - best).abs() <= 1e-9 * (1.0 + best.abs()), "lambda {lambda}: {got} vs {best}");
            assert!(sol.kkt_residual <= 1e-9);
        }
    }

    #[test]
    fn kkt_large_at_zero_and_objective_decreases() {
        let model = random_model(9, 10, 8);
        let l = DiffOp2::new(8).unwrap();
        let x = DVector::from_vec(SeededRng::new(10).normal_vec(10)) * 3.0;
        let zero = DVector::zeros(8);
        assert!(kkt_residual(&model, &l, &x, 1e-3, &zero).unwrap() > 0.1);
        let sol = solve_l1_pen(&model, &DiffOp2::new(model.dim()).unwrap(), &x, 1.0, SolverSettings::default()).unwrap();
        assert!(objective_value(&model, &l, &x, 1.0, &sol.theta) <= objective_value(&model, &l, &x, 1.0, &zero));
        assert!(sol.log.windows(2).all(|w| w[1].objective <= w[0].objective + 1e-9 * (1.0 + w[0].objective.abs())));
        assert!(sol.log_csv().starts_with("iter,objective,kkt_residual\n0,"));
    }

    #[test]
    fn objective_value_independent_evaluator() {
        let model = random_model(11, 7, 5);
        let l = DiffOp2::new(5).unwrap();
        let mut rng = SeededRng::new(12);
        let x = DVector::from_vec(rng.normal_vec(7));
        let theta = DVector::from_vec(rng.normal_vec(5));
        let r = x.clone() - model.h() * &theta;
        let mut pen = 0.0;
        for i in 0..3 {
            pen += (theta[i] - 2.0 * theta[i + 1] + theta[i + 2]).abs();
        }
        let expected = r.norm_squared() + 0.7 * pen;
        assert!((objective_value(&model, &l, &x, 0.7, &theta) - expected).abs() < 1e-12);
        assert_eq!(objective_value(&model, &l, &x, 0.7, &DVector::zeros(5)), x.norm_squared());
    }

    #[test]
    fn deterministic_and_warm_start_consistent() {
        let model = random_model(13, 16, 12);
        let solver = L1Solver::new(&model, DiffOp2::new(model.dim()).unwrap(), SolverSettings::default()).unwrap();
        let x = DVector::from_vec(SeededRng::new(14).normal_vec(16)) * 2.0;
        let u = model.sufficient_statistic(&x).unwrap();
        let a = solver.solve_from_stat(&u, 0.8, None).unwrap();
        let b = solver.solve_from_stat(&u, 0.8, None).unwrap();
        assert_eq!(a, b);
        let up = &u + DVector::from_element(12, 1e-4);
        let cold = solver.solve_from_stat(&up, 0.8, None).unwrap();
        let warm = solver.solve_from_stat(&up, 0.8, Some(&a.theta)).unwrap();
        assert!((cold.theta - &warm.theta).amax() < 1e-8);
        assert!(warm.iterations <= cold.iterations);
    }

    #[test]
    fn critical_lambda_is_the_affine_threshold() {
        let model = random_model(15, 14, 10);
        let solver = L1Solver::new(&model, DiffOp2::new(10).unwrap(), SolverSettings::default()).unwrap();
        let x = DVector::from_vec(SeededRng::new(16).normal_vec(14)) * 3.0;
        let u = model.sufficient_statistic(&x).unwrap();
        let lmax = solver.critical_lambda(&u);
        let l = DiffOp2::new(10).unwrap();
        let above = solver.solve_from_stat(&u, lmax * 1.001, None).unwrap();
        assert!(l.apply(&above.theta).amax() < 1e-9 * (1.0 + above.theta.amax()));
        let below = solver.solve_from_stat(&u, lmax * 0.99, None).unwrap();
        assert!(l.apply(&below.theta).amax() > 1e-6);
    }

    #[test]
    fn rejects_operator_blind_to_affine() {
        // H sums second differences only: constants and ramps map to zero.
        let l = DiffOp2::new(5).unwrap().matrix();
        let model = LinearGaussianModel::with_iid_noise(l, 1.0).unwrap();
        assert!(L1Solver::new(&model, DiffOp2::new(model.dim()).unwrap(), SolverSettings::default()).is_err());
    }
}
