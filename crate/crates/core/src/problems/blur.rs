//! Gaussian point-spread functions and circular 2-D convolution.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `dim x dim` samples of `exp(-(i^2 + j^2) / (2 sd^2))` centered at the
/// middle pixel, normalized to unit sum.
pub fn gaussian_psf(dim: usize, sd: f64) -> Result<DMatrix<f64>> {
    let g = gaussian_profile(dim, sd)?;
    Ok(&g * g.transpose())
}

/// Normalized 1-D profile whose outer product is [`gaussian_psf`].
pub fn gaussian_profile(dim: usize, sd: f64) -> Result<nalgebra::DVector<f64>> {
    if dim.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("PSF dimension must be odd, got {dim}")));
    }
    if !(sd > 0.0) {
        return Err(Error::InvalidArgument(format!("PSF standard deviation must be positive, got {sd}")));
    }
    let c = (dim / 2) as f64;
    let g = nalgebra::DVector::from_fn(dim, |i, _| (-((i as f64 - c).powi(2)) / (2.0 * sd * sd)).exp());
    let s = g.sum();
    Ok(g / s)
}

/// Circular convolution of a `height x width` row-major image with a
/// centered odd-sized kernel.
#[derive(Debug, Clone)]
pub struct CirculantBlur {
    kernel: DMatrix<f64>,
    height: usize,
    width: usize,
}

/// `n x n` circulant matrix applying a centered 1-D kernel periodically.
pub fn circulant_1d(kernel: &[f64], n: usize) -> DMatrix<f64> {
    let half = kernel.len() / 2;
    let mut m = DMatrix::zeros(n, n);
    for r in 0..n {
        for (i, &k) in kernel.iter().enumerate() {
            let s = (r + n * kernel.len() + half - i) % n;
            m[(r, s)] += k;
        }
    }
    m
}

impl CirculantBlur {
    pub fn new(kernel: DMatrix<f64>, height: usize, width: usize) -> Result<Self> {
        let (kh, kw) = kernel.shape();
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::InvalidArgument("kernel dimensions must be odd".into()));
        }
        if height < kh || width < kw {
            return Err(Error::InvalidArgument(format!(
                "image {height}x{width} is smaller than the {kh}x{kw} kernel"
            )));
        }
        Ok(Self { kernel, height, width })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `y[r][c] = sum k[i][j] x[(r + ci - i) mod H][(c + cj - j) mod W]`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (h, w) = (self.height, self.width);
        if x.len() != h * w {
            return Err(Error::DimensionMismatch { expected: h * w, got: x.len() });
        }
        let (kh, kw) = self.kernel.shape();
        let (ci, cj) = (kh / 2, kw / 2);
        let mut y = vec![0.0; h * w];
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for i in 0..kh {
                    let rr = (r + h * kh + ci - i) % h;
                    for j in 0..kw {
                        let cc = (c + w * kw + cj - j) % w;
                        acc += self.kernel[(i, j)] * x[rr * w + cc];
                    }
                }
                y[r * w + c] = acc;
            }
        }
        Ok(y)
    }

    /// Explicit `N x N` matrix (row-major pixel order).
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.height * self.width;
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e).expect("sized input");
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
            e[j] = 0.0;
        }
        m
    }

    /// `(H_col, H_row)` with `H = H_col ⊗ H_row` when the kernel is rank one.
    pub fn separable_factors(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let svd = self.kernel.clone().svd(true, true);
        let s = &svd.singular_values;
        if s.len() > 1 && s[1] > 1e-12 * s[0] {
            return None;
        }
        let u = svd.u.as_ref()?.column(0).into_owned() * s[0].sqrt();
        let v = svd.v_t.as_ref()?.row(0).transpose() * s[0].sqrt();
        // Fix the sign so both factors have positive sums.
        let sign = if u.sum() < 0.0 { -1.0 } else { 1.0 };
        let (u, v) = (u * sign, v * sign);
        Some((circulant_1d(u.as_slice(), self.height), circulant_1d(v.as_slice(), self.width)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn psf_properties() {
        let k = gaussian_psf(9, 6.0).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-12);
        for i in 0..9 {
            for j in 0..9 {
                assert!((k[(i, j)] - k[(j, 8 - i)]).abs() < 1e-15);
            }
        }
        assert_eq!(gaussian_psf(1, 2.0).unwrap()[(0, 0)], 1.0);
        assert!(gaussian_psf(4, 1.0).is_err());
    }

    #[test]
    fn delta_and_constant() {
        let delta = DMatrix::from_element(1, 1, 1.0);
        let b = CirculantBlur::new(delta, 4, 4).unwrap();
        assert_eq!(b.dense(), DMatrix::identity(16, 16));
        let g = CirculantBlur::new(gaussian_psf(5, 1.5).unwrap(), 8, 8).unwrap();
        let y = g.apply(&[2.0; 64]).unwrap();
        assert!(y.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn matvec_matches_dense_and_kronecker() {
        let mut rng = SeededRng::new(3);
        let k = DMatrix::from_fn(3, 3, |_, _| rng.uniform());
        let b = CirculantBlur::new(k, 16, 16).unwrap();
        let x = rng.normal_vec(256);
        let d = &b.dense() * nalgebra::DVector::from_vec(x.clone());
        let y = b.apply(&x).unwrap();
        for (a, c) in d.iter().zip(&y) {
            assert!((a - c).abs() < 1e-10);
        }
        assert!(b.separable_factors().is_none());

        let g = CirculantBlur::new(gaussian_psf(9, 6.0).unwrap(), 16, 12).unwrap();
        let (hc, hr) = g.separable_factors().unwrap();
        assert!((hc.kronecker(&hr) - g.dense()).amax() < 1e-12);
        assert!((&hc - hc.transpose()).amax() < 1e-14);
    }
}
