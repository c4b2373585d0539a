//! Periodic orthonormal discrete wavelet transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Minimum-phase Daubechies low-pass filters from spectral factorization of
// the Daubechies polynomial, rounded from 50-digit arithmetic.

/// 4 vanishing moments.
#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.23037781330889650086,
    0.71484657055291564709,
    0.63088076792985890788,
    -0.027983769416859854211,
    -0.18703481171909308408,
    0.030841381835560763627,
    0.032883011666885199735,
    -0.010597401785069032105,
];

/// 8 vanishing moments.
#[allow(clippy::excessive_precision)]
const DB8: [f64; 16] = [
    0.054415842243104009955,
    0.31287159091429997066,
    0.67563073629728980681,
    0.58535468365420671277,
    -0.015829105256349305667,
    -0.28401554296154692652,
    0.00047248457391328277036,
    0.12874742662047845886,
    -0.01736930100180754617,
    -0.044088253930794751507,
    0.013981027917398281649,
    0.0087460940474057767164,
    -0.0048703529934515743104,
    -0.0003917403733769470463,
    0.00067544940645056936637,
    -0.00011747678412476953373,
];

/// Orthonormal filter family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFilter {
    /// Length-8 Daubechies filter (4 vanishing moments). Used as the
    /// "Daubechies 8" filter by default.
    #[default]
    Db4,
    /// Length-16 Daubechies filter (8 vanishing moments).
    Db8,
}

impl WaveletFilter {
    pub fn lowpass(self) -> &'static [f64] {
        match self {
            WaveletFilter::Db4 => &DB4,
            WaveletFilter::Db8 => &DB8,
        }
    }

    /// Quadrature mirror high-pass `g[j] = (-1)^j h[L-1-j]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|j| if j % 2 == 0 { h[l - 1 - j] } else { -h[l - 1 - j] })
            .collect()
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "db4" | "daubechies8" | "d8" => Ok(WaveletFilter::Db4),
            "db8" | "d16" => Ok(WaveletFilter::Db8),
            _ => Err(Error::UnknownName(format!("wavelet filter {name:?}"))),
        }
    }
}

/// Multilevel periodic transform with a fixed filter and depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletBasis {
    pub filter: WaveletFilter,
    pub levels: usize,
}

/// Approximation band plus detail bands ordered finest to coarsest.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub n_total: usize,
}

impl WaveletCoeffs {
    pub fn energy(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        sq(&self.approx) + self.details.iter().map(|d| sq(d)).sum::<f64>()
    }
}

impl WaveletBasis {
    pub fn new(filter: WaveletFilter, levels: usize) -> Self {
        Self { filter, levels }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if !n.is_power_of_two() || n < (1usize << self.levels) {
            return Err(Error::LengthError {
                len: n,
                levels: self.levels,
            });
        }
        Ok(())
    }

    pub fn dwt(&self, x: &[f64]) -> Result<WaveletCoeffs> {
        self.check_len(x.len())?;
        let h = self.filter.lowpass();
        let g = self.filter.highpass();
        let mut approx = x.to_vec();
        let mut details = Vec::with_capacity(self.levels);
        for _ in 0..self.levels {
            let n = approx.len();
            let half = n / 2;
            let mut a = vec![0.0; half];
            let mut d = vec![0.0; half];
            for k in 0..half {
                let (mut sa, mut sd) = (0.0, 0.0);
                for (j, (&hj, &gj)) in h.iter().zip(&g).enumerate() {
                    let v = approx[(2 * k + j) % n];
                    sa += hj * v;
                    sd += gj * v;
                }
                a[k] = sa;
                d[k] = sd;
            }
            details.push(d);
            approx = a;
        }
        Ok(WaveletCoeffs {
            approx,
            details,
            n_total: x.len(),
        })
    }

    pub fn idwt(&self, coeffs: &WaveletCoeffs) -> Result<Vec<f64>> {
        if coeffs.details.len() != self.levels {
            return Err(Error::InvalidArgument(format!(
                "expected {} detail bands, got {}",
                self.levels,
                coeffs.details.len()
            )));
        }
        self.check_len(coeffs.n_total)?;
        let h = self.filter.lowpass();
        let g = self.filter.highpass();
        let mut approx = coeffs.approx.clone();
        for d in coeffs.details.iter().rev() {
            let half = approx.len();
            if d.len() != half {
                return Err(Error::DimensionMismatch {
                    expected: half,
                    got: d.len(),
                });
            }
            let n = 2 * half;
            let mut out = vec![0.0; n];
            for k in 0..half {
                for (j, (&hj, &gj)) in h.iter().zip(&g).enumerate() {
                    out[(2 * k + j) % n] += hj * approx[k] + gj * d[k];
                }
            }
            approx = out;
        }
        Ok(approx)
    }
}
