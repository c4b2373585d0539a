//! Donoho–Johnstone test signals.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KNOTS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

/// Sample standard deviation every signal is rescaled to.
pub const DJ_SD: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DjSignal {
    Blocks,
    Bumps,
    HeaviSine,
    Doppler,
}

impl DjSignal {
    pub const ALL: [DjSignal; 4] = [DjSignal::Blocks, DjSignal::Bumps, DjSignal::HeaviSine, DjSignal::Doppler];

    pub fn name(self) -> &'static str {
        match self {
            DjSignal::Blocks => "Blocks",
            DjSignal::Bumps => "Bumps",
            DjSignal::HeaviSine => "HeaviSine",
            DjSignal::Doppler => "Doppler",
        }
    }

    /// Value of the unscaled function at `t`.
    pub fn eval(self, t: f64) -> f64 {
        match self {
            // Right-continuous steps: each knot adds its height from t_j on.
            DjSignal::Blocks => KNOTS
                .iter()
                .zip(&BLOCK_HEIGHTS)
                .map(|(&k, &h)| if t >= k { h } else { 0.0 })
                .sum(),
            DjSignal::Bumps => KNOTS
                .iter()
                .zip(&BUMP_HEIGHTS)
                .zip(&BUMP_WIDTHS)
                .map(|((&k, &h), &w)| h * (1.0 + ((t - k) / w).abs()).powi(-4))
                .sum(),
            DjSignal::HeaviSine => 4.0 * (4.0 * PI * t).sin() - sgn(t - 0.3) - sgn(0.72 - t),
            DjSignal::Doppler => {
                let eps = 0.05;
                (t * (1.0 - t)).sqrt() * (2.0 * PI * (1.0 + eps) / (t + eps)).sin()
            }
        }
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl fmt::Display for DjSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DjSignal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blocks" => Ok(DjSignal::Blocks),
            "bumps" => Ok(DjSignal::Bumps),
            "heavisine" => Ok(DjSignal::HeaviSine),
            "doppler" => Ok(DjSignal::Doppler),
            _ => Err(Error::UnknownName(format!("signal {s:?}"))),
        }
    }
}

/// Unscaled samples at `t_i = i/n`, `i = 1..=n`.
pub fn dj_signal_raw(signal: DjSignal, n: usize) -> Vec<f64> {
    (1..=n).map(|i| signal.eval(i as f64 / n as f64)).collect()
}

/// Samples rescaled to sample standard deviation 7.
pub fn dj_signal(signal: DjSignal, n: usize) -> Result<Vec<f64>> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::InvalidArgument(format!("signal length must be a power of two, got {n}")));
    }
    let raw = dj_signal_raw(signal, n);
    let sd = sample_sd(&raw);
    Ok(raw.iter().map(|v| v * DJ_SD / sd).collect())
}

/// Looks a signal up by name.
pub fn dj_signal_by_name(name: &str, n: usize) -> Result<Vec<f64>> {
    dj_signal(name.parse()?, n)
}

pub fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heavisine_midpoint() {
        assert_eq!(DjSignal::HeaviSine.eval(0.5).round(), -2.0);
        assert!((DjSignal::HeaviSine.eval(0.5) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn all_signals_have_sd_seven() {
        for s in DjSignal::ALL {
            let x = dj_signal(s, 2048).unwrap();
            assert!((sample_sd(&x) - 7.0).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn blocks_has_eleven_jumps() {
        let x = dj_signal(DjSignal::Blocks, 2048).unwrap();
        let jumps = x.windows(2).filter(|w| (w[1] - w[0]).abs() > 1e-12).count();
        assert_eq!(jumps, 11);
    }

    #[test]
    fn bumps_are_nonnegative_and_peak_at_knots() {
        let x = dj_signal_raw(DjSignal::Bumps, 2048);
        assert!(x.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn names_parse() {
        assert_eq!("doppler".parse::<DjSignal>().unwrap(), DjSignal::Doppler);
        assert!(matches!("ramp".parse::<DjSignal>(), Err(Error::UnknownName(_))));
        assert!(dj_signal(DjSignal::Blocks, 1000).is_err());
    }
}
