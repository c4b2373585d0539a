//! Experiment configuration: a TOML file with top-level `seed`, `trials`
//! and `out`, plus one optional table per experiment. Unknown keys are
//! rejected.
//!
//! ```toml
//! seed = 1
//! trials = 25
//!
//! [denoise]
//! n = 2048
//! sigma2 = 4.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problems::DjSignal;
use crate::wavelet::WaveletFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifySure,
    Deblur,
    Deconv,
    Denoise,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifySure => "verify-sure",
            Experiment::Deblur => "deblur",
            Experiment::Deconv => "deconv",
            Experiment::Denoise => "denoise",
        }
    }

    /// Seeds for the simulation experiments, Monte-Carlo trials per pair
    /// for `verify-sure`.
    pub fn default_trials(self) -> usize {
        match self {
            Experiment::VerifySure => 100_000,
            Experiment::Deblur => 10,
            Experiment::Deconv => 25,
            Experiment::Denoise => 25,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub denoise: DenoiseConfig,
    #[serde(default)]
    pub deconv: DeconvConfig,
    #[serde(default)]
    pub deblur: DeblurConfig,
}

fn default_seed() -> u64 {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: default_seed(),
            trials: None,
            out: None,
            verify: VerifyConfig::default(),
            denoise: DenoiseConfig::default(),
            deconv: DeconvConfig::default(),
            deblur: DeblurConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// `model/estimator` names; empty means every bundled pair.
    pub pairs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub n: usize,
    pub sigma2: f64,
    pub levels: usize,
    pub filter: WaveletFilter,
    pub signals: Vec<DjSignal>,
    /// Universal-threshold cap for SureShrink.
    pub sure_cap: bool,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            n: 2048,
            sigma2: 4.0,
            levels: 5,
            filter: WaveletFilter::Db4,
            signals: DjSignal::ALL.to_vec(),
            sure_cap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceMethod {
    /// Rademacher probes through the solver.
    MonteCarlo,
    /// Jacobian of the piecewise-affine solution map.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeconvConfig {
    pub n: usize,
    pub kappa: f64,
    pub sigma: f64,
    pub probes: usize,
    pub divergence: DivergenceMethod,
    /// Grid spans `[ratio, 1] * lambda_crit`, where `lambda_crit` is the
    /// smallest lambda with an affine solution.
    pub lambda_min_ratio: f64,
    pub per_decade: usize,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self {
            n: 80,
            kappa: 1.0,
            sigma: 1.0,
            probes: 32,
            divergence: DivergenceMethod::MonteCarlo,
            lambda_min_ratio: 1e-4,
            per_decade: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeblurConfig {
    pub size: usize,
    /// Built-in images (`blobs`, `squares`).
    pub images: Vec<String>,
    /// Extra grayscale PGM inputs, `size x size`.
    pub image_paths: Vec<PathBuf>,
    pub psf_dim: usize,
    pub psf_sd: f64,
    pub sigmas: Vec<f64>,
    /// Optional absolute lambda range; defaults to the operator's scaled grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    pub per_decade: usize,
    /// Write restored images for the first seed.
    pub write_images: bool,
}

impl Default for DeblurConfig {
    fn default() -> Self {
        Self {
            size: 64,
            images: vec!["blobs".into(), "squares".into()],
            image_paths: Vec::new(),
            psf_dim: 9,
            psf_sd: 6.0,
            sigmas: vec![0.01, 0.05, 0.1],
            lambda_min: None,
            lambda_max: None,
            per_decade: 10,
            write_images: true,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Number of seeds (or trials) after defaults.
    pub fn trials_for(&self, exp: Experiment) -> usize {
        self.trials.unwrap_or(exp.default_trials())
    }

    /// Seeds `seed .. seed + trials`.
    pub fn seeds(&self, exp: Experiment) -> std::ops::Range<u64> {
        self.seed..self.seed + self.trials_for(exp) as u64
    }

    pub fn seed_range(&self, exp: Experiment) -> String {
        let r = self.seeds(exp);
        format!("{}-{}", r.start, r.end.saturating_sub(1))
    }

    /// The configuration as run, with defaults filled and the output
    /// directory left out, so it does not affect the hash.
    pub fn resolved(&self, exp: Experiment) -> Self {
        let mut c = self.clone();
        c.experiment = Some(exp);
        c.trials = Some(self.trials_for(exp));
        c.out = None;
        c
    }

    pub fn echo(&self, exp: Experiment) -> String {
        toml::to_string(&self.resolved(exp)).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::echo`].
    pub fn hash(&self, exp: Experiment) -> String {
        let digest = Sha256::digest(self.echo(exp).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self, exp: Experiment) -> Result<()> {
        if let Some(e) = self.experiment {
            if e != exp {
                return Err(bad(format!("config is for `{e}`, not `{exp}`")));
            }
        }
        if self.trials == Some(0) {
            return Err(bad("trials must be at least 1"));
        }
        match exp {
            Experiment::VerifySure => {
                if self.trials_for(exp) < 2 {
                    return Err(bad("verify-sure needs at least 2 trials"));
                }
            }
            Experiment::Denoise => {
                let d = &self.denoise;
                if !d.n.is_power_of_two() || d.levels == 0 || d.n >> d.levels == 0 || !d.n.is_multiple_of(1 << d.levels) {
                    return Err(bad(format!("denoise: n = {} must be a power of two divisible by 2^levels", d.n)));
                }
                if !(d.sigma2 > 0.0) {
                    return Err(bad("denoise: sigma2 must be positive"));
                }
                if d.signals.is_empty() {
                    return Err(bad("denoise: no signals"));
                }
            }
            Experiment::Deconv => {
                let d = &self.deconv;
                if d.n < 8 || !d.n.is_multiple_of(2) {
                    return Err(bad("deconv: n must be even and at least 8"));
                }
                if !(d.kappa > 0.0) || !(d.sigma >= 0.0) {
                    return Err(bad("deconv: kappa must be positive and sigma nonnegative"));
                }
                if d.probes == 0 || d.per_decade == 0 {
                    return Err(bad("deconv: probes and per_decade must be positive"));
                }
                if !(d.lambda_min_ratio > 0.0 && d.lambda_min_ratio < 1.0) {
                    return Err(bad("deconv: lambda_min_ratio must lie in (0, 1)"));
                }
            }
            Experiment::Deblur => {
                let d = &self.deblur;
                if d.size < d.psf_dim || d.psf_dim.is_multiple_of(2) {
                    return Err(bad("deblur: psf_dim must be odd and no larger than the image"));
                }
                if !(d.psf_sd > 0.0) {
                    return Err(bad("deblur: psf_sd must be positive"));
                }
                if d.sigmas.is_empty() || d.sigmas.iter().any(|s| !(*s >= 0.0)) {
                    return Err(bad("deblur: sigmas must be nonnegative and nonempty"));
                }
                if d.images.is_empty() && d.image_paths.is_empty() {
                    return Err(bad("deblur: no images"));
                }
                for name in &d.images {
                    if !matches!(name.as_str(), "blobs" | "squares") {
                        return Err(Error::UnknownName(format!("image `{name}`")));
                    }
                }
                match (d.lambda_min, d.lambda_max) {
                    (None, None) => {}
                    (Some(a), Some(b)) if a > 0.0 && b > a => {}
                    _ => return Err(bad("deblur: lambda_min and lambda_max must be given together with 0 < min < max")),
                }
                if d.per_decade == 0 {
                    return Err(bad("deblur: per_decade must be positive"));
                }
            }
        }
        Ok(())
    }
}
