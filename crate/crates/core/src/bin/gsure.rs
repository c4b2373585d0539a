//! `gsure`: batch experiments for SURE-based parameter selection.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 configuration
//! or report-schema error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsure_core::experiments::{merge_report_files, run, Experiment, ExperimentConfig};
use gsure_core::Error;

#[derive(Parser)]
#[command(name = "gsure", version, about = "SURE-based estimator selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo check of SURE unbiasedness on every bundled model/estimator pair.
    VerifySure(RunArgs),
    /// Tikhonov deblurring with SURE and GCV selection.
    Deblur(RunArgs),
    /// l1-penalized deconvolution of the heat problem with SURE and the discrepancy principle.
    Deconv(RunArgs),
    /// Wavelet denoising of the Donoho-Johnstone signals.
    Denoise(RunArgs),
    /// Merge report CSVs and print them as text tables.
    Table {
        /// Report CSV files written by the other commands.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Write the merged CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// First seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds, or Monte-Carlo trials for verify-sure (overrides the config).
    #[arg(long)]
    trials: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownName(_) | Error::SchemaMismatch { .. } | Error::DuplicateRow { .. } => 2,
        _ => 1,
    }
}

fn run_experiment(exp: Experiment, args: RunArgs) -> Result<bool, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = Some(trials);
    }
    if args.out.is_some() {
        config.out = args.out;
    }
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let outcome = run(exp, &config)?;
    let paths = outcome.write_to(&out_dir)?;
    print!("{}", outcome.summary());
    for p in paths {
        println!("wrote {}", p.display());
    }
    if !outcome.passed() {
        let failed: Vec<&str> = outcome.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        eprintln!("failed checks: {}", failed.join(", "));
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifySure(a) => run_experiment(Experiment::VerifySure, a),
        Command::Deblur(a) => run_experiment(Experiment::Deblur, a),
        Command::Deconv(a) => run_experiment(Experiment::Deconv, a),
        Command::Denoise(a) => run_experiment(Experiment::Denoise, a),
        Command::Table { reports, out } => merge_report_files(&reports).and_then(|merged| {
            if let Some(path) = out {
                std::fs::write(path, merged.to_csv())?;
            }
            print!("{}", merged.render_text());
            Ok(true)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
