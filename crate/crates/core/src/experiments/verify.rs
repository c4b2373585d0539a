//! Monte-Carlo unbiasedness checks over the bundled model/estimator pairs.

use nalgebra::{DMatrix, DVector};

use super::{base_outcome, stream_seed, Check, Experiment, ExperimentConfig, Outcome, OutputFile, ReportRow};
use crate::error::{Error, Result};
use crate::expfam::{
    mc_unbiasedness_check, EstimatorMap, IidGaussian, LinearEstimator, ScalarGamma, SoftThresholdEstimator, SteinEstimator,
    UnbiasednessReport, ZeroEstimator,
};
use crate::gaussian::{BlindMinimax, LinearGaussianModel};
use crate::numfmt::fmt12;
use crate::rng::SeededRng;

const PAIRS: [&str; 9] = [
    "iid-gaussian/identity",
    "iid-gaussian/zero",
    "iid-gaussian/stein",
    "iid-gaussian/soft-threshold",
    "linear-gaussian/ml",
    "linear-gaussian/tikhonov",
    "linear-gaussian/blind-minimax",
    "rank-deficient-gaussian/ml",
    "scalar-gamma/identity",
];

pub fn bundled_pair_names() -> &'static [&'static str] {
    &PAIRS
}

fn iid_theta() -> DVector<f64> {
    DVector::from_vec(vec![1.0, -0.5, 0.25, 2.0, 0.0, -1.0, 0.75, 1.5])
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = SeededRng::new(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// 6 x 4 operator with correlated noise.
fn full_rank_model() -> Result<LinearGaussianModel> {
    let h = random_matrix(6, 4, 11);
    let b = random_matrix(6, 6, 12) * 0.3;
    LinearGaussianModel::new(h, &b * b.transpose() + DMatrix::identity(6, 6))
}

/// 6 x 4 operator of rank 2.
fn rank_deficient_model() -> Result<LinearGaussianModel> {
    let h = random_matrix(6, 2, 13) * random_matrix(2, 4, 14);
    LinearGaussianModel::with_iid_noise(h, 1.0)
}

/// Runs one named pair with `trials` draws.
pub fn run_pair(name: &str, trials: usize, seed: u64) -> Result<UnbiasednessReport> {
    let (model_name, est_name) = name
        .split_once('/')
        .ok_or_else(|| Error::UnknownName(format!("pair `{name}` (expected model/estimator)")))?;
    let unknown = || Error::UnknownName(format!("pair `{name}`"));
    match model_name {
        "iid-gaussian" => {
            let sigma2 = 1.0;
            let model = IidGaussian::new(8, sigma2)?;
            let theta = iid_theta();
            let identity = LinearEstimator::scaled_identity(8, sigma2);
            let stein = SteinEstimator::new(sigma2, false);
            let soft = SoftThresholdEstimator::new(1.0, sigma2);
            let est: &dyn crate::expfam::Estimator = match est_name {
                "identity" => &identity,
                "zero" => &ZeroEstimator,
                "stein" => &stein,
                "soft-threshold" => &soft,
                _ => return Err(unknown()),
            };
            mc_unbiasedness_check(&model, &theta, &EstimatorMap::analytic(est), trials, seed)
        }
        "linear-gaussian" => {
            let model = full_rank_model()?;
            let theta = DVector::from_vec(vec![0.8, -1.2, 0.3, 1.0]);
            let ml = model.ml_map();
            let q = model.q().clone();
            let tikhonov = LinearEstimator::new(
                (q + DMatrix::identity(4, 4))
                    .try_inverse()
                    .ok_or(Error::ModelSingularity)?,
            );
            let bm = BlindMinimax::new(&model, false);
            let est: &dyn crate::expfam::Estimator = match est_name {
                "ml" => &ml,
                "tikhonov" => &tikhonov,
                "blind-minimax" => &bm,
                _ => return Err(unknown()),
            };
            mc_unbiasedness_check(&model, &theta, &EstimatorMap::analytic(est), trials, seed)
        }
        "rank-deficient-gaussian" => {
            let model = rank_deficient_model()?;
            let theta = DVector::from_vec(vec![1.0, 0.5, -0.5, 2.0]);
            let ml = model.ml_map();
            match est_name {
                "ml" => mc_unbiasedness_check(&model, &theta, &EstimatorMap::analytic(&ml), trials, seed),
                _ => Err(unknown()),
            }
        }
        "scalar-gamma" => {
            let model = ScalarGamma::new(3.0)?;
            let theta = DVector::from_element(1, -1.5);
            let identity = LinearEstimator::scaled_identity(1, 1.0);
            match est_name {
                "identity" => mc_unbiasedness_check(&model, &theta, &EstimatorMap::analytic(&identity), trials, seed),
                _ => Err(unknown()),
            }
        }
        _ => Err(unknown()),
    }
}

pub fn run_verify(config: &ExperimentConfig) -> Result<Outcome> {
    let exp = Experiment::VerifySure;
    let mut out = base_outcome(exp, config);
    let trials = config.trials_for(exp);
    let names: Vec<String> = if config.verify.pairs.is_empty() {
        PAIRS.iter().map(|s| s.to_string()).collect()
    } else {
        config.verify.pairs.clone()
    };
    for name in &names {
        if !PAIRS.contains(&name.as_str()) {
            return Err(Error::UnknownName(format!("pair `{name}`; known pairs: {}", PAIRS.join(", "))));
        }
    }
    if trials < 1000 {
        out.warnings.push(format!("underpowered: {trials} trials per pair (at least 1000 recommended)"));
    }
    let mut csv = String::from("model,estimator,trials,score_plus_energy,empirical_mse,std_err,z,pass\n");
    for name in &names {
        let index = PAIRS.iter().position(|p| p == name).expect("validated") as u64;
        let r = run_pair(name, trials, stream_seed(config.seed, index))?;
        let (model, est) = name.split_once('/').expect("validated");
        csv.push_str(&format!(
            "{model},{est},{trials},{},{},{},{},{}\n",
            fmt12(r.mean_score + r.theta_energy),
            fmt12(r.empirical_mse),
            fmt12(r.std_err),
            fmt12(r.z),
            r.pass
        ));
        out.report.rows.push(ReportRow {
            table: "verify-sure".into(),
            method: est.into(),
            problem: model.into(),
            seeds: format!("{}", config.seed),
            mean: r.empirical_mse,
            std_err: r.std_err,
            reference: None,
            config_hash: out.config_hash.clone(),
        });
        out.checks.push(Check::new(
            format!("unbiased {name}"),
            r.pass,
            format!(
                "mean score + energy {:.5} vs empirical MSE {:.5}, z = {:.2}",
                r.mean_score + r.theta_energy,
                r.empirical_mse,
                r.z
            ),
        ));
    }
    out.extra.push(OutputFile::text("verify_sure.csv", csv));
    Ok(out)
}
