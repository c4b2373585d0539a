//! Tikhonov deblurring of 2-D images: SURE against GCV.

use rayon::prelude::*;

use super::{base_outcome, mean_se, stream_seed, Check, Experiment, ExperimentConfig, Outcome, OutputFile, ReportRow};
use crate::error::{Error, Result};
use crate::numfmt::fmt12;
use crate::problems::{add_noise, gaussian_psf, pgm_read, synthetic_image, CirculantBlur, GrayImage};
use crate::regselect::spectral::SeparableTikhonov;
use crate::regselect::{LambdaGrid, Selector, DEFAULT_REFINE_TOL};

/// Noise variance used for the model when the data are noise free.
const NOISE_FREE_VARIANCE: f64 = 1e-12;

/// Per seed: SURE lambda and MSE, GCV lambda and MSE, warnings, images.
type SeedRow = (f64, f64, f64, f64, Vec<String>, Vec<OutputFile>);

/// Reference SURE and GCV values at sigma = 0.01, 0.05, 0.1, for the two
/// reference photographs the built-in images stand in for.
fn reference_value(image: &str, selector: Selector, sigma: f64) -> Option<f64> {
    let row: [f64; 3] = match (image, selector) {
        ("blobs", Selector::Sure) => [0.0011, 0.0025, 0.0042],
        ("blobs", Selector::Gcv) => [0.0022, 0.0077, 0.0133],
        ("squares", Selector::Sure) => [0.0016, 0.0039, 0.0064],
        ("squares", Selector::Gcv) => [0.0033, 0.0121, 0.0221],
        _ => return None,
    };
    [0.01, 0.05, 0.1].iter().position(|s| (s - sigma).abs() < 1e-12).map(|k| row[k])
}

struct Scene {
    name: String,
    image: GrayImage,
}

fn load_scenes(config: &ExperimentConfig) -> Result<Vec<Scene>> {
    let d = &config.deblur;
    let mut scenes = Vec::new();
    for name in &d.images {
        scenes.push(Scene {
            name: name.clone(),
            image: synthetic_image(name, d.size)?,
        });
    }
    for path in &d.image_paths {
        let image = pgm_read(path)?;
        if image.width != d.size || image.height != d.size {
            return Err(Error::InvalidArgument(format!(
                "{}: image is {}x{}, expected {}x{}",
                path.display(),
                image.width,
                image.height,
                d.size,
                d.size
            )));
        }
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        scenes.push(Scene { name, image });
    }
    Ok(scenes)
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

struct Cell {
    sure: Vec<f64>,
    gcv: Vec<f64>,
    files: Vec<OutputFile>,
    warnings: Vec<String>,
}

pub fn run_deblur(config: &ExperimentConfig) -> Result<Outcome> {
    let exp = Experiment::Deblur;
    let mut out = base_outcome(exp, config);
    let d = &config.deblur;
    let scenes = load_scenes(config)?;
    let blur = CirculantBlur::new(gaussian_psf(d.psf_dim, d.psf_sd)?, d.size, d.size)?;
    let (h_col, h_row) = blur
        .separable_factors()
        .ok_or_else(|| Error::InvalidArgument("point-spread function is not separable".into()))?;
    let seeds: Vec<u64> = config.seeds(exp).collect();
    let mut per_seed = String::from("image,sigma,seed,method,lambda,mse\n");

    for (i, scene) in scenes.iter().enumerate() {
        let blurred = blur.apply(&scene.image.pixels)?;
        for (k, &sigma) in d.sigmas.iter().enumerate() {
            let variance = if sigma > 0.0 { sigma * sigma } else { NOISE_FREE_VARIANCE };
            let sep = SeparableTikhonov::new(&h_col, &h_row, variance)?;
            let grid = match (d.lambda_min, d.lambda_max) {
                (Some(a), Some(b)) => LambdaGrid::new(a, b, d.per_decade)?,
                _ => {
                    let g = sep.default_grid();
                    LambdaGrid::new(g.min, g.max, d.per_decade)?
                }
            };
            let stream = (i * d.sigmas.len() + k) as u64;
            let rows: Vec<SeedRow> = seeds
                .par_iter()
                .enumerate()
                .map(|(j, &seed)| {
                    let x = add_noise(&blurred, sigma, stream_seed(seed, stream));
                    let sure = sep.select(&x, Selector::Sure, &grid, DEFAULT_REFINE_TOL)?;
                    let gcv = sep.select(&x, Selector::Gcv, &grid, DEFAULT_REFINE_TOL)?;
                    let warnings: Vec<String> = sure
                        .warnings
                        .iter()
                        .chain(&gcv.warnings)
                        .map(|w| format!("{} sigma {sigma} seed {seed}: {w}", scene.name))
                        .collect();
                    let mut files = Vec::new();
                    if j == 0 && d.write_images {
                        let stem = format!("deblur_{}_sigma{}", scene.name, sigma);
                        let (w, h) = (d.size, d.size);
                        for (tag, v) in [("observed", x.as_slice()), ("sure", sure.estimate.as_slice()), ("gcv", gcv.estimate.as_slice())] {
                            files.push(OutputFile {
                                name: format!("{stem}_{tag}.pgm"),
                                bytes: GrayImage::from_clamped(w, h, v)?.to_pgm_bytes(),
                            });
                        }
                    }
                    Ok((
                        sure.lambda_star,
                        mse(sure.estimate.as_slice(), &scene.image.pixels),
                        gcv.lambda_star,
                        mse(gcv.estimate.as_slice(), &scene.image.pixels),
                        warnings,
                        files,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut cell = Cell {
                sure: Vec::new(),
                gcv: Vec::new(),
                files: Vec::new(),
                warnings: Vec::new(),
            };
            for (seed, (ls, ms, lg, mg, w, f)) in seeds.iter().zip(rows) {
                per_seed.push_str(&format!("{},{sigma},{seed},sure,{},{}\n", scene.name, fmt12(ls), fmt12(ms)));
                per_seed.push_str(&format!("{},{sigma},{seed},gcv,{},{}\n", scene.name, fmt12(lg), fmt12(mg)));
                cell.sure.push(ms);
                cell.gcv.push(mg);
                cell.warnings.extend(w);
                cell.files.extend(f);
            }
            let problem = format!("{} sigma={sigma}", scene.name);
            let (sm, sse) = mean_se(&cell.sure);
            let (gm, gse) = mean_se(&cell.gcv);
            for (method, mean, std_err, sel) in [("sure", sm, sse, Selector::Sure), ("gcv", gm, gse, Selector::Gcv)] {
                out.report.rows.push(ReportRow {
                    table: "deblur".into(),
                    method: method.into(),
                    problem: problem.clone(),
                    seeds: config.seed_range(exp),
                    mean,
                    std_err,
                    reference: reference_value(&scene.name, sel, sigma),
                    config_hash: out.config_hash.clone(),
                });
            }
            out.checks.push(Check::new(
                format!("sure <= gcv {problem}"),
                sm <= gm,
                format!("mean MSE SURE {sm:.6} vs GCV {gm:.6}"),
            ));
            out.warnings.extend(cell.warnings);
            out.extra.extend(cell.files);
        }
    }
    out.extra.insert(0, OutputFile::text("deblur_per_seed.csv", per_seed));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig { trials: Some(2), ..Default::default() };
        c.deblur.size = 16;
        c.deblur.psf_dim = 5;
        c.deblur.psf_sd = 2.0;
        c.deblur.sigmas = vec![0.05];
        c.deblur.per_decade = 4;
        c
    }

    #[test]
    fn small_run_writes_images_and_is_deterministic() {
        let c = small();
        let a = run_deblur(&c).unwrap();
        let b = run_deblur(&c).unwrap();
        assert_eq!(a.files(), b.files());
        let pgms = a.extra.iter().filter(|f| f.name.ends_with(".pgm")).count();
        assert_eq!(pgms, 2 * 3);
        assert_eq!(a.report.rows.len(), 4);
        assert_eq!(a.report.rows[0].reference, Some(0.0025));
    }

    #[test]
    fn noise_free_hits_the_grid_edge() {
        let mut c = small();
        c.deblur.sigmas = vec![0.0];
        c.deblur.images = vec!["squares".into()];
        let out = run_deblur(&c).unwrap();
        assert!(out.warnings.iter().any(|w| w.contains("boundary")), "{:?}", out.warnings);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.pgm");
        crate::problems::pgm_write(&synthetic_image("blobs", 8).unwrap(), &path).unwrap();
        let mut c = small();
        c.deblur.image_paths = vec![path];
        assert!(matches!(run_deblur(&c), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reference_values_only_for_tabulated_levels() {
        assert_eq!(reference_value("blobs", Selector::Sure, 0.05), Some(0.0025));
        assert_eq!(reference_value("squares", Selector::Gcv, 0.1), Some(0.0221));
        assert_eq!(reference_value("blobs", Selector::Gcv, 0.2), None);
    }
}
