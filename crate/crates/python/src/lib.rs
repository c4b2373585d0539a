//! Python bindings for `gsure_core`: test problems, wavelet shrinkage, the
//! l1 solver, Monte-Carlo SURE checks and the batch experiments.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use gsure_core::experiments::{self, Experiment, ExperimentConfig};
use gsure_core::gaussian::LinearGaussianModel;
use gsure_core::sparse::{DiffOp2, L1Solver, SolverSettings};
use gsure_core::wavelet::{self, LevelPolicy, ShrinkageRule, WaveletBasis, WaveletFilter};
use gsure_core::{problems, Error};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::UnknownName(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::LengthError { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("matrix must be a nonempty list of equal-length rows"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows_of(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn parse_rule(name: &str, cap: bool) -> PyResult<ShrinkageRule> {
    Ok(match name {
        "identity" => ShrinkageRule::Identity,
        "sureshrink" => ShrinkageRule::SureShrink { cap },
        "hard-sureshrink" => ShrinkageRule::HardSure { cap },
        "rsure" => ShrinkageRule::Rsure,
        "hard-rsure" => ShrinkageRule::HardRsure,
        "oracle" => ShrinkageRule::OracleSoft,
        "scalar" => ShrinkageRule::Scalar,
        "stein" => ShrinkageRule::Stein,
        _ => return Err(PyValueError::new_err(format!("unknown shrinkage rule {name:?}"))),
    })
}

/// Donoho-Johnstone test signal rescaled to standard deviation 7.
#[pyfunction]
fn dj_signal(name: &str, n: usize) -> PyResult<Vec<f64>> {
    problems::dj_signal_by_name(name, n).map_err(py_err)
}

/// `clean + sigma * N(0, 1)` from a seeded stream.
#[pyfunction]
fn add_noise(clean: Vec<f64>, sigma: f64, seed: u64) -> Vec<f64> {
    problems::add_noise(&clean, sigma, seed)
}

/// Wavelet denoising; returns `(estimate, per-level parameters)`.
#[pyfunction]
#[pyo3(signature = (signal, sigma, rule = "rsure", levels = 5, filter = "db4", global_level = false, cap = true, truth = None))]
#[allow(clippy::too_many_arguments)]
fn denoise(
    signal: Vec<f64>,
    sigma: f64,
    rule: &str,
    levels: usize,
    filter: &str,
    global_level: bool,
    cap: bool,
    truth: Option<Vec<f64>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let basis = WaveletBasis::new(WaveletFilter::parse(filter).map_err(py_err)?, levels);
    let policy = if global_level { LevelPolicy::Global } else { LevelPolicy::PerLevel };
    let out = wavelet::denoise(&signal, &basis, parse_rule(rule, cap)?, sigma, policy, truth.as_deref()).map_err(py_err)?;
    Ok((out.signal, out.params))
}

/// SureShrink threshold for one band.
#[pyfunction]
#[pyo3(signature = (coeffs, sigma, cap = true))]
fn sure_soft_select(coeffs: Vec<f64>, sigma: f64, cap: bool) -> PyResult<f64> {
    if !(sigma > 0.0) {
        return Err(PyValueError::new_err("sigma must be positive"));
    }
    Ok(wavelet::sure_soft_select(&coeffs, sigma, cap))
}

/// Regularized-SURE shrinkage of one band; returns `(lambda, estimate)`.
#[pyfunction]
fn rsure_select(coeffs: Vec<f64>, sigma2: f64) -> PyResult<(f64, Vec<f64>)> {
    if !(sigma2 > 0.0) {
        return Err(PyValueError::new_err("sigma2 must be positive"));
    }
    let sel = wavelet::rsure_select_lambda(&coeffs, sigma2);
    Ok((sel.lambda, sel.estimate))
}

/// `(H rows, true theta, clean data)`.
type HeatTuple = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>);

/// Discretized heat problem; returns `(H rows, true theta, clean data)`.
#[pyfunction]
#[pyo3(signature = (n = 80, kappa = 1.0))]
fn heat_problem(n: usize, kappa: f64) -> PyResult<HeatTuple> {
    let p = problems::heat_problem(n, kappa).map_err(py_err)?;
    Ok((rows_of(&p.h), p.true_theta.as_slice().to_vec(), p.clean.as_slice().to_vec()))
}

/// Minimizes `|x - H theta|^2 / sigma2 + lambda |D2 theta|_1`; returns
/// `(theta, kkt_residual, iterations)`.
#[pyfunction]
fn solve_l1(h: Vec<Vec<f64>>, x: Vec<f64>, sigma2: f64, lam: f64) -> PyResult<(Vec<f64>, f64, usize)> {
    let h = matrix_from_rows(&h)?;
    if x.len() != h.nrows() {
        return Err(PyValueError::new_err(format!("x has {} entries, H has {} rows", x.len(), h.nrows())));
    }
    let model = LinearGaussianModel::with_iid_noise(h, sigma2).map_err(py_err)?;
    let l = DiffOp2::new(model.h().ncols()).map_err(py_err)?;
    let solver = L1Solver::new(&model, l, SolverSettings::default()).map_err(py_err)?;
    let sol = solver.solve(&model, &DVector::from_vec(x), lam).map_err(py_err)?;
    Ok((sol.theta.as_slice().to_vec(), sol.kkt_residual, sol.iterations))
}

/// Monte-Carlo unbiasedness check of one bundled `model/estimator` pair;
/// returns `(mean score + energy, empirical MSE, z, pass)`.
#[pyfunction]
#[pyo3(signature = (pair, trials = 10_000, seed = 1))]
fn verify_pair(pair: &str, trials: usize, seed: u64) -> PyResult<(f64, f64, f64, bool)> {
    let r = experiments::run_pair(pair, trials, seed).map_err(py_err)?;
    Ok((r.mean_score + r.theta_energy, r.empirical_mse, r.z, r.pass))
}

/// Names accepted by [`verify_pair`].
#[pyfunction]
fn bundled_pairs() -> Vec<&'static str> {
    experiments::bundled_pair_names().to_vec()
}

/// Runs a batch experiment from TOML text; returns `(report CSV, summary,
/// all checks passed)`. Nothing is written to disk.
#[pyfunction]
#[pyo3(signature = (name, config = ""))]
fn run_experiment(name: &str, config: &str) -> PyResult<(String, String, bool)> {
    let exp = match name {
        "verify-sure" => Experiment::VerifySure,
        "deblur" => Experiment::Deblur,
        "deconv" => Experiment::Deconv,
        "denoise" => Experiment::Denoise,
        _ => return Err(PyValueError::new_err(format!("unknown experiment {name:?}"))),
    };
    let cfg = ExperimentConfig::parse(config).map_err(py_err)?;
    let out = experiments::run(exp, &cfg).map_err(py_err)?;
    Ok((out.report.to_csv(), out.summary(), out.passed()))
}

#[pymodule]
fn gsure(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(dj_signal, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(sure_soft_select, m)?)?;
    m.add_function(wrap_pyfunction!(rsure_select, m)?)?;
    m.add_function(wrap_pyfunction!(heat_problem, m)?)?;
    m.add_function(wrap_pyfunction!(solve_l1, m)?)?;
    m.add_function(wrap_pyfunction!(verify_pair, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
