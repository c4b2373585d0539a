//! One-dimensional search over a geometric lambda grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric grid `[min, max]` with a fixed number of points per decade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub per_decade: usize,
}

impl LambdaGrid {
    pub fn new(min: f64, max: f64, per_decade: usize) -> Result<Self> {
        if !(min > 0.0 && max > min && max.is_finite() && per_decade >= 1) {
            return Err(Error::InvalidArgument(format!(
                "lambda grid needs 0 < min < max and at least one point per decade (got [{min}, {max}], {per_decade})"
            )));
        }
        Ok(Self { min, max, per_decade })
    }

    /// `[1e-6, 1e3] * scale`, ten points per decade.
    pub fn scaled_default(scale: f64) -> Self {
        Self {
            min: 1e-6 * scale,
            max: 1e3 * scale,
            per_decade: 10,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let decades = (self.max / self.min).log10();
        let steps = (decades * self.per_decade as f64).round().max(1.0) as usize;
        let (lo, hi) = (self.min.ln(), self.max.ln());
        (0..=steps)
            .map(|i| match i {
                0 => self.min,
                _ if i == steps => self.max,
                _ => (lo + (hi - lo) * i as f64 / steps as f64).exp(),
            })
            .collect()
    }
}

/// Result of a grid scan with golden-section refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub lambda: f64,
    pub score: f64,
    /// Grid evaluations ordered by lambda.
    pub curve: Vec<(f64, f64)>,
    /// Minimum on a grid endpoint, or a curve flat to rounding.
    pub boundary: bool,
}

/// Relative flatness below which a curve is reported as degenerate.
const FLAT_TOL: f64 = 1e-10;

/// Evaluates `score` on every grid point in parallel (results kept in grid
/// order), then refines the best interior point by golden-section search on
/// `ln lambda` until the bracket is below `rel_tol` relative.
pub fn minimize_on_grid<F>(grid: &LambdaGrid, score: F, rel_tol: f64) -> Result<GridMinimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let points = grid.points();
    let values: Vec<f64> = points.par_iter().map(|&l| score(l)).collect::<Result<_>>()?;
    let curve: Vec<(f64, f64)> = points.iter().copied().zip(values.iter().copied()).collect();

    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values[best];
    let flat = hi - lo <= FLAT_TOL * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
    let last = points.len() - 1;
    if flat || best == 0 || best == last {
        let idx = if flat { 0 } else { best };
        return Ok(GridMinimum {
            lambda: points[idx],
            score: values[idx],
            curve,
            boundary: true,
        });
    }

    let (lambda, s) = golden_section(
        |t: f64| score(t.exp()),
        points[best - 1].ln(),
        points[best + 1].ln(),
        (points[best].ln(), values[best]),
        rel_tol,
    )?;
    Ok(GridMinimum {
        lambda: lambda.exp(),
        score: s,
        curve,
        boundary: false,
    })
}

/// Golden-section minimization on `[a, b]`; returns the best point seen,
/// including `seed`. Stops when `b - a <= tol` (absolute in `ln lambda`,
/// hence relative in lambda).
pub fn golden_section<F>(f: F, mut a: f64, mut b: f64, seed: (f64, f64), tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = seed;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let tol = tol.max(1e-14);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_geometric() {
        let g = LambdaGrid::new(1e-2, 1e2, 10).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 41);
        assert_eq!(p[0], 1e-2);
        assert_eq!(p[40], 1e2);
        assert!((p[10] - 1e-1).abs() < 1e-14);
    }

    #[test]
    fn parabola_minimum_recovered() {
        let g = LambdaGrid::new(1e-3, 1e3, 10).unwrap();
        let target = 3.7f64;
        let r = minimize_on_grid(&g, |l| Ok((l.ln() - target.ln()).powi(2) + 1.0), 1e-10).unwrap();
        assert!(!r.boundary);
        assert!((r.lambda - target).abs() < 1e-6 * target);
    }

    #[test]
    fn monotone_and_flat_curves_flag_boundary() {
        let g = LambdaGrid::new(1e-3, 1e3, 5).unwrap();
        let r = minimize_on_grid(&g, Ok, 1e-6).unwrap();
        assert!(r.boundary);
        assert_eq!(r.lambda, 1e-3);
        let r = minimize_on_grid(&g, |_| Ok(2.5), 1e-6).unwrap();
        assert!(r.boundary);
    }

    #[test]
    fn invalid_grid_rejected() {
        assert!(LambdaGrid::new(0.0, 1.0, 10).is_err());
        assert!(LambdaGrid::new(2.0, 1.0, 10).is_err());
    }
}
