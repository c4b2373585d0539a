//! Randomized properties checked against independent oracles.

use gsure_core::expfam::{sure_score, EstimatorMap, IidGaussian, LinearEstimator, SoftThresholdEstimator};
use gsure_core::gaussian::LinearGaussianModel;
use gsure_core::sparse::{kkt_residual_from_stat, DiffOp2, L1Solver, SolverSettings};
use gsure_core::wavelet::{rsure_coeffs, rsure_threshold, soft_threshold, sure_soft_select, WaveletBasis, WaveletFilter};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_threshold_norm_is_nonincreasing(c in prop::collection::vec(-10.0..10.0f64, 1..40), t1 in 0.0..5.0f64, dt in 0.0..5.0f64) {
        prop_assert!(norm2(&soft_threshold(&c, t1 + dt)) <= norm2(&soft_threshold(&c, t1)) + 1e-12);
    }

    #[test]
    fn rsure_zero_set_matches_threshold(c in prop::collection::vec(-10.0..10.0f64, 1..40), sigma2 in 0.01..5.0f64, lambda in 0.0..5.0f64) {
        let t = rsure_threshold(sigma2, lambda);
        let (alpha, est) = rsure_coeffs(&c, sigma2, lambda);
        for ((ci, ai), ei) in c.iter().zip(&alpha).zip(&est) {
            prop_assert_eq!(*ai == 0.0, ci.abs() <= t);
            prop_assert!((0.0..1.0).contains(ai));
            prop_assert_eq!(*ei, ai * ci);
        }
    }

    #[test]
    fn sure_threshold_beats_every_candidate(c in prop::collection::vec(-6.0..6.0f64, 2..30), sigma in 0.2..3.0f64) {
        // Classical SURE of soft thresholding, evaluated directly.
        let sure = |t: f64| -> f64 {
            let s2 = sigma * sigma;
            c.iter().map(|&x| if x.abs() <= t { x * x - s2 } else { s2 + t * t }).sum()
        };
        let t = sure_soft_select(&c, sigma, false);
        let best = std::iter::once(0.0).chain(c.iter().map(|x| x.abs())).map(sure).fold(f64::INFINITY, f64::min);
        prop_assert!(sure(t) <= best + 1e-9 * (1.0 + best.abs()));
    }

    #[test]
    fn wavelet_round_trip(seed in any::<u64>(), log_n in 4usize..10, levels in 1usize..4, long in any::<bool>()) {
        let n = 1 << log_n;
        let mut rng = gsure_core::SeededRng::new(seed);
        let x = rng.normal_vec(n);
        let filter = if long { WaveletFilter::Db8 } else { WaveletFilter::Db4 };
        let basis = WaveletBasis::new(filter, levels);
        let c = basis.dwt(&x).unwrap();
        prop_assert!((c.energy() - norm2(&x)).abs() <= 1e-9 * norm2(&x));
        let y = basis.idwt(&c).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sure_of_linear_map_matches_closed_form(seed in any::<u64>(), scale in 0.0..2.0f64, sigma2 in 0.1..4.0f64) {
        // For h(u) = a sigma^2 u = a x: |h|^2 + 2 a m sigma^2 - 2 a |x|^2.
        let m = 6;
        let mut rng = gsure_core::SeededRng::new(seed);
        let x = DVector::from_vec(rng.normal_vec(m)) * 2.0;
        let model = IidGaussian::new(m, sigma2).unwrap();
        let est = LinearEstimator::scaled_identity(m, scale * sigma2);
        let u = &x / sigma2;
        let score = sure_score(&model, &EstimatorMap::analytic(&est), &u).unwrap().score;
        let expected = scale * scale * x.norm_squared() + 2.0 * scale * m as f64 * sigma2 - 2.0 * scale * x.norm_squared();
        prop_assert!((score - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn soft_threshold_estimator_matches_wavelet_rule(seed in any::<u64>(), t in 0.0..3.0f64) {
        let mut rng = gsure_core::SeededRng::new(seed);
        let u = rng.normal_vec(10);
        let est = SoftThresholdEstimator::new(t, 1.0);
        let a = gsure_core::expfam::Estimator::apply(&est, &DVector::from_vec(u.clone()));
        let b = soft_threshold(&u, t);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn l1_solutions_satisfy_kkt(seed in any::<u64>(), m in 4usize..14, frac in 0.01..1.2f64) {
        let mut rng = gsure_core::SeededRng::new(seed);
        let n = m + 3;
        let h = DMatrix::from_fn(n, m, |_, _| rng.normal());
        let model = LinearGaussianModel::with_iid_noise(h, 0.3).unwrap();
        let l = DiffOp2::new(m).unwrap();
        let solver = L1Solver::new(&model, l, SolverSettings::default()).unwrap();
        let x = DVector::from_vec(rng.normal_vec(n)) * 2.0;
        let u = model.sufficient_statistic(&x).unwrap();
        let lambda = solver.critical_lambda(&u) * frac;
        let sol = solver.solve_from_stat(&u, lambda, None).unwrap();
        prop_assert!(kkt_residual_from_stat(model.q(), &u, &l, lambda, &sol.theta) <= 1e-6);
        if frac >= 1.0 {
            // Past the critical value the fit is affine: second differences vanish.
            prop_assert!(l.apply(&sol.theta).amax() <= 1e-7 * (1.0 + sol.theta.amax()));
        }
    }
}
