//! Grayscale images: binary PGM I/O and synthetic test scenes.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self { width, height, pixels })
    }

    /// Clamps to `[0, 1]`; for writing restored images.
    pub fn from_clamped(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        Self::new(width, height, values.iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    /// Encodes as binary PGM with maxval 255.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
        out
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos)?;
        if magic != "P5" {
            return Err(Error::Pgm(format!("unsupported PGM variant {magic:?}; only binary P5 is read")));
        }
        let width = parse_header_int(bytes, &mut pos, "width")?;
        let height = parse_header_int(bytes, &mut pos, "height")?;
        let maxval = parse_header_int(bytes, &mut pos, "maxval")?;
        if maxval != 255 {
            return Err(Error::Pgm(format!("maxval {maxval} unsupported (expected 255)")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let data = bytes.get(pos..pos + width * height).ok_or_else(|| {
            Error::Pgm(format!("raster truncated: expected {} bytes", width * height))
        })?;
        Self::new(width, height, data.iter().map(|&b| b as f64 / 255.0).collect())
    }
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::Pgm("unexpected end of header".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_header_int(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    tok.parse()
        .map_err(|_| Error::Pgm(format!("malformed {what} {tok:?}")))
}

pub fn pgm_read(path: &Path) -> Result<GrayImage> {
    GrayImage::from_pgm_bytes(&std::fs::read(path)?)
}

pub fn pgm_write(img: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, img.to_pgm_bytes())?;
    Ok(())
}

/// Smooth scene: a few Gaussian blobs on a gentle gradient.
pub fn smooth_blobs(size: usize) -> GrayImage {
    let blobs = [
        (0.3, 0.35, 0.12, 0.55),
        (0.7, 0.3, 0.08, 0.45),
        (0.55, 0.72, 0.15, 0.5),
        (0.2, 0.8, 0.06, 0.35),
    ];
    let s = size as f64;
    let pixels = (0..size * size)
        .map(|k| {
            let (y, x) = ((k / size) as f64 / s, (k % size) as f64 / s);
            let mut v = 0.1 + 0.15 * x;
            for (cx, cy, w, a) in blobs {
                v += a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp();
            }
            v.clamp(0.0, 1.0)
        })
        .collect();
    GrayImage { width: size, height: size, pixels }
}

/// Piecewise-constant scene of overlapping squares.
pub fn squares(size: usize) -> GrayImage {
    let rects = [
        (0.1, 0.1, 0.45, 0.5, 0.8),
        (0.3, 0.55, 0.7, 0.9, 0.55),
        (0.6, 0.15, 0.9, 0.45, 0.95),
        (0.5, 0.4, 0.65, 0.6, 0.3),
    ];
    let s = size as f64;
    let pixels = (0..size * size)
        .map(|k| {
            let (y, x) = ((k / size) as f64 / s, (k % size) as f64 / s);
            let mut v = 0.15;
            for (x0, y0, x1, y1, level) in rects {
                if x >= x0 && x < x1 && y >= y0 && y < y1 {
                    v = level;
                }
            }
            v
        })
        .collect();
    GrayImage { width: size, height: size, pixels }
}

/// Named synthetic images.
pub fn synthetic_image(name: &str, size: usize) -> Result<GrayImage> {
    match name {
        "blobs" => Ok(smooth_blobs(size)),
        "squares" => Ok(squares(size)),
        _ => Err(Error::UnknownName(format!("synthetic image {name:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_black_pixel_bytes() {
        let img = GrayImage::new(1, 1, vec![0.0]).unwrap();
        assert_eq!(img.to_pgm_bytes(), b"P5\n1 1\n255\n\x00".to_vec());
    }

    #[test]
    fn round_trip_through_file() {
        let img = smooth_blobs(16);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        pgm_write(&img, &path).unwrap();
        let back = pgm_read(&path).unwrap();
        assert_eq!((back.width, back.height), (16, 16));
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn rejects_ascii_and_other_maxval() {
        let err = GrayImage::from_pgm_bytes(b"P2\n1 1\n255\n0\n").unwrap_err();
        assert!(err.to_string().contains("P5"));
        assert!(GrayImage::from_pgm_bytes(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(GrayImage::from_pgm_bytes(b"P5\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = GrayImage::from_pgm_bytes(b"P5\n# made by hand\n2 1\n255\n\xff\x00").unwrap();
        assert_eq!(img.pixels, vec![1.0, 0.0]);
    }

    #[test]
    fn synthetic_images_in_range() {
        for name in ["blobs", "squares"] {
            let img = synthetic_image(name, 64).unwrap();
            assert_eq!(img.pixels.len(), 4096);
            assert!(img.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
