//! Reproducible test problems.

mod blur;
mod heat;
mod image;
mod signals;

pub use blur::{circulant_1d, gaussian_profile, gaussian_psf, CirculantBlur};
pub use heat::{heat_kernel, heat_problem};
pub use image::{pgm_read, pgm_write, smooth_blobs, squares, synthetic_image, GrayImage};
pub use signals::{dj_signal, dj_signal_by_name, dj_signal_raw, sample_sd, DjSignal, DJ_SD};

use nalgebra::{DMatrix, DVector};

use crate::rng::SeededRng;

/// A forward operator with its true parameter and clean data `H theta`.
#[derive(Debug, Clone)]
pub struct TestProblem {
    pub name: String,
    pub h: DMatrix<f64>,
    pub true_theta: DVector<f64>,
    pub clean: DVector<f64>,
}

impl TestProblem {
    pub fn new(name: String, h: DMatrix<f64>, true_theta: DVector<f64>) -> Self {
        let clean = &h * &true_theta;
        Self { name, h, true_theta, clean }
    }
}

/// `clean + sigma z` with `z` drawn from `SeededRng::new(seed)`.
pub fn add_noise(clean: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    clean.iter().map(|c| c + sigma * rng.normal()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_reproducible_and_unit_variance() {
        let clean = vec![0.0; 1_000_000];
        let a = add_noise(&clean, 1.0, 42);
        assert_eq!(a, add_noise(&clean, 1.0, 42));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (a.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.01);
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(add_noise(&x, 0.0, 7), x);
    }
}
