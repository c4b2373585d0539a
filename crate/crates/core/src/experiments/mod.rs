//! Batch experiments behind the `gsure` CLI. Each run is a pure function of
//! its configuration: seeds fan out in parallel and results are collected in
//! seed order, so every output file is byte-identical across runs and
//! thread counts.

pub mod config;
mod deblur;
mod deconv;
mod denoise;
pub mod report;
mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{DeblurConfig, DeconvConfig, DenoiseConfig, DivergenceMethod, Experiment, ExperimentConfig, VerifyConfig};
pub use deblur::run_deblur;
pub use deconv::run_deconv;
pub use denoise::run_denoise;
pub use report::{mean_se, ExperimentReport, ReportRow, REPORT_HEADER};
pub use verify::{bundled_pair_names, run_pair, run_verify};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// A pass/fail statement about a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    pub fn text(name: impl Into<String>, text: String) -> Self {
        Self {
            name: name.into(),
            bytes: text.into_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub experiment: Experiment,
    pub report: ExperimentReport,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Per-seed tables and images; the report files are added by
    /// [`Outcome::files`].
    pub extra: Vec<OutputFile>,
    pub config_echo: String,
    pub config_hash: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let mut s = self.report.render_text();
        for c in &self.checks {
            let _ = writeln!(s, "[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    pub fn files(&self) -> Vec<OutputFile> {
        let name = self.experiment.name().replace('-', "_");
        let provenance = format!(
            "# gsure {}\n# config hash {}\n{}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.config_echo
        );
        let mut files = vec![
            OutputFile::text(format!("{name}_report.csv"), self.report.to_csv()),
            OutputFile::text(format!("{name}_report.txt"), self.summary()),
            OutputFile::text(format!("{name}_config.toml"), provenance),
        ];
        files.extend(self.extra.iter().cloned());
        files
    }

    /// Writes every output file into `dir` (created if missing).
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for f in self.files() {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.bytes)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Runs `exp` after validating `config` for it.
pub fn run(exp: Experiment, config: &ExperimentConfig) -> Result<Outcome> {
    config.validate(exp)?;
    match exp {
        Experiment::VerifySure => run_verify(config),
        Experiment::Deblur => run_deblur(config),
        Experiment::Deconv => run_deconv(config),
        Experiment::Denoise => run_denoise(config),
    }
}

/// Seed of an independent noise stream for one (seed, stream) pair.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    SeededRng::derive(seed, stream).next_u64()
}

/// Merges report CSVs for the `table` command.
pub fn merge_report_files(paths: &[PathBuf]) -> Result<ExperimentReport> {
    if paths.is_empty() {
        return Err(Error::Config("no reports given".into()));
    }
    let reports = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            ExperimentReport::from_csv(&text, &p.display().to_string())
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::merge(&reports)
}

fn base_outcome(exp: Experiment, config: &ExperimentConfig) -> Outcome {
    Outcome {
        experiment: exp,
        report: ExperimentReport::default(),
        checks: Vec::new(),
        warnings: Vec::new(),
        extra: Vec::new(),
        config_echo: config.echo(exp),
        config_hash: config.hash(exp),
    }
}
