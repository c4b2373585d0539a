//! Wavelet denoising of the Donoho-Johnstone signals.

use rayon::prelude::*;

use super::{base_outcome, mean_se, stream_seed, Check, Experiment, ExperimentConfig, Outcome, OutputFile, ReportRow};
use crate::error::Result;
use crate::numfmt::fmt12;
use crate::problems::{add_noise, dj_signal, DjSignal};
use crate::wavelet::{denoise, LevelPolicy, ShrinkageRule, WaveletBasis};

struct Method {
    table: &'static str,
    name: &'static str,
    rule: fn(bool) -> ShrinkageRule,
    policy: LevelPolicy,
    /// Reference values for Blocks, Bumps, HeaviSine, Doppler.
    reference: Option<[f64; 4]>,
}

const METHODS: [Method; 9] = [
    Method {
        table: "soft",
        name: "original",
        rule: |_| ShrinkageRule::Identity,
        policy: LevelPolicy::PerLevel,
        reference: Some([4.054, 4.072, 4.153, 3.945]),
    },
    Method {
        table: "soft",
        name: "sureshrink",
        rule: |cap| ShrinkageRule::SureShrink { cap },
        policy: LevelPolicy::PerLevel,
        reference: Some([0.744, 0.875, 0.205, 0.290]),
    },
    Method {
        table: "soft",
        name: "rsure",
        rule: |_| ShrinkageRule::Rsure,
        policy: LevelPolicy::PerLevel,
        reference: Some([0.694, 0.816, 0.169, 0.273]),
    },
    Method {
        table: "soft",
        name: "oracleshrink",
        rule: |_| ShrinkageRule::OracleSoft,
        policy: LevelPolicy::PerLevel,
        reference: Some([0.690, 0.828, 0.118, 0.283]),
    },
    Method {
        table: "linear",
        name: "scalarshrink",
        rule: |_| ShrinkageRule::Scalar,
        policy: LevelPolicy::PerLevel,
        reference: Some([1.043, 1.362, 0.161, 0.594]),
    },
    Method {
        table: "linear",
        name: "steinshrink",
        rule: |_| ShrinkageRule::Stein,
        policy: LevelPolicy::PerLevel,
        reference: Some([1.681, 1.730, 1.508, 1.413]),
    },
    Method {
        table: "linear",
        name: "steinshrink-global",
        rule: |_| ShrinkageRule::Stein,
        policy: LevelPolicy::Global,
        reference: Some([1.681, 1.730, 1.508, 1.413]),
    },
    Method {
        table: "hard",
        name: "hard-sureshrink",
        rule: |cap| ShrinkageRule::HardSure { cap },
        policy: LevelPolicy::PerLevel,
        reference: Some([1.902, 1.961, 0.988, 0.630]),
    },
    Method {
        table: "hard",
        name: "hard-rsure",
        rule: |_| ShrinkageRule::HardRsure,
        policy: LevelPolicy::PerLevel,
        reference: Some([1.560, 1.912, 0.766, 0.700]),
    },
];

fn signal_index(s: DjSignal) -> usize {
    DjSignal::ALL.iter().position(|&t| t == s).expect("bundled signal")
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

pub fn run_denoise(config: &ExperimentConfig) -> Result<Outcome> {
    let exp = Experiment::Denoise;
    let mut out = base_outcome(exp, config);
    let d = &config.denoise;
    let basis = WaveletBasis::new(d.filter, d.levels);
    let sigma = d.sigma2.sqrt();
    let seeds: Vec<u64> = config.seeds(exp).collect();
    let seed_range = config.seed_range(exp);

    // mse[signal][method][seed]
    let mut table: Vec<Vec<Vec<f64>>> = Vec::new();
    for &signal in &d.signals {
        let clean = dj_signal(signal, d.n)?;
        let stream = signal_index(signal) as u64;
        let per_seed: Vec<Vec<f64>> = seeds
            .par_iter()
            .map(|&seed| {
                let noisy = add_noise(&clean, sigma, stream_seed(seed, stream));
                METHODS
                    .iter()
                    .map(|m| {
                        let est = denoise(&noisy, &basis, (m.rule)(d.sure_cap), sigma, m.policy, Some(&clean))?;
                        Ok(mse(&est.signal, &clean))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        table.push((0..METHODS.len()).map(|k| per_seed.iter().map(|r| r[k]).collect()).collect());
    }

    let mut per_seed_csv = String::from("signal,rule,seed,mse\n");
    let mut table_csvs: Vec<(&str, String)> = Vec::new();
    for (k, m) in METHODS.iter().enumerate() {
        for (i, &signal) in d.signals.iter().enumerate() {
            for (s, v) in seeds.iter().zip(&table[i][k]) {
                per_seed_csv.push_str(&format!("{},{},{},{}\n", signal.name(), m.name, s, fmt12(*v)));
            }
            let (mean, std_err) = mean_se(&table[i][k]);
            out.report.rows.push(ReportRow {
                table: m.table.into(),
                method: m.name.into(),
                problem: signal.name().into(),
                seeds: seed_range.clone(),
                mean,
                std_err,
                reference: m.reference.map(|p| p[signal_index(signal)]),
                config_hash: out.config_hash.clone(),
            });
        }
        if !table_csvs.iter().any(|(t, _)| *t == m.table) {
            table_csvs.push((m.table, String::new()));
        }
    }
    for (name, text) in &mut table_csvs {
        let sub = super::ExperimentReport {
            rows: out.report.rows.iter().filter(|r| r.table == *name).cloned().collect(),
        };
        *text = sub.to_csv();
    }
    out.extra.push(OutputFile::text("denoise_per_seed.csv", per_seed_csv));
    for (name, text) in table_csvs {
        out.extra.push(OutputFile::text(format!("denoise_{name}.csv"), text));
    }
    out.checks = denoise_checks(config, &d.signals, &table);
    Ok(out)
}

fn method_index(name: &str) -> usize {
    METHODS.iter().position(|m| m.name == name).expect("bundled method")
}

fn denoise_checks(config: &ExperimentConfig, signals: &[DjSignal], table: &[Vec<Vec<f64>>]) -> Vec<Check> {
    let sigma2 = config.denoise.sigma2;
    let stat = |i: usize, name: &str| mean_se(&table[i][method_index(name)]);
    let mut checks = Vec::new();
    for (i, &signal) in signals.iter().enumerate() {
        let (orig, _) = stat(i, "original");
        checks.push(Check::new(
            format!("original {signal}"),
            (orig - sigma2).abs() <= 0.15,
            format!("mean MSE {orig:.4} vs noise variance {sigma2} (tolerance 0.15)"),
        ));
        let (sure, _) = stat(i, "sureshrink");
        let (rsure, _) = stat(i, "rsure");
        checks.push(Check::new(
            format!("rsure <= sureshrink {signal}"),
            rsure <= sure,
            format!("RSURE {rsure:.4} vs SureShrink {sure:.4}"),
        ));
        let bound = match signal {
            DjSignal::Blocks | DjSignal::Bumps => 1.0,
            DjSignal::HeaviSine | DjSignal::Doppler => 0.5,
        };
        checks.push(Check::new(
            format!("shrinkage magnitude {signal}"),
            sure < bound && rsure < bound,
            format!("SureShrink {sure:.4}, RSURE {rsure:.4}, bound {bound}"),
        ));
        let (stein, _) = stat(i, "steinshrink");
        checks.push(Check::new(
            format!("steinshrink above 1 {signal}"),
            stein > 1.0,
            format!("SteinShrink {stein:.4}"),
        ));
    }
    checks
}
