#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

//! `dclab`: spectral-gap eigenvalues of Dirac operators with Coulomb
//! potentials from measure-valued charge distributions.
//!
//! Every run writes a self-contained record directory
//! `<out>/<timestamp>-<command>/` with `record.json`, any CSV tables, and
//! a short `log.txt`. Exit codes: 0 success, 2 validation error,
//! 3 numerical failure.

mod commands;
mod record;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "dclab",
    version,
    about = "Dirac-Coulomb spectral gap laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Measure specification file (JSON with atoms/clouds arrays).
    #[arg(long, global = true, env = "DCLAB_MEASURE")]
    pub measure: Option<PathBuf>,

    /// Total coupling for mass-parameterized commands.
    #[arg(long, global = true, env = "DCLAB_NU")]
    pub nu: Option<f64>,

    /// Number of atoms in optimizer searches.
    #[arg(long, global = true, env = "DCLAB_K", default_value_t = 2)]
    pub k: usize,

    /// RNG seed for stochastic searches.
    #[arg(long, global = true, env = "DCLAB_SEED", default_value_t = 1)]
    pub seed: u64,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "DCLAB_THREADS")]
    pub threads: Option<usize>,

    /// Output directory for run records.
    #[arg(long, global = true, env = "DCLAB_OUT", default_value = "runs")]
    pub out: PathBuf,

    /// Even-tempered basis size per center.
    #[arg(
        long = "basis-n",
        global = true,
        env = "DCLAB_BASIS_N",
        default_value_t = 14
    )]
    pub basis_n: usize,

    /// Integration grid preset (1 coarse, 2 default, 3 fine).
    #[arg(
        long = "grid-level",
        global = true,
        env = "DCLAB_GRID_LEVEL",
        default_value_t = 2
    )]
    pub grid_level: u8,

    /// Root-finder tolerance on the eigenvalue parameter.
    #[arg(long, global = true, env = "DCLAB_TOL", default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First gap eigenvalue of the measure (3D backend).
    Solve,
    /// First gap eigenvalue of a radially symmetric measure (1D backend).
    Radial,
    /// Two-delta scan: lambda_1 versus atom separation.
    Scan {
        /// Weight fraction on the first atom.
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        /// Separations to scan.
        #[arg(long, value_delimiter = ',',
              default_values_t = vec![0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0])]
        distances: Vec<f64>,
    },
    /// Search K-atom configurations minimizing lambda_1 at fixed mass.
    Optimize {
        /// Independent restarts.
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Objective evaluations per restart.
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
    /// Critical couplings nu_0 and nu_1 of the measure.
    Critical,
    /// Analytic bounds at the given coupling (no solve).
    Bounds,
    /// Merge run records into comparison tables.
    Report {
        /// record.json paths to merge.
        records: Vec<PathBuf>,
        /// Output format (csv).
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore failure when a pool exists (tests and repeated calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match commands::run(&cli) {
        Ok(record_dir) => {
            if let Some(dir) = record_dir {
                println!("record written to {}", dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {:#}", err.source);
            ExitCode::from(err.code)
        }
    }
}

/// Error with its process exit code (2 validation, 3 numerical).
pub struct CliError {
    pub code: u8,
    pub source: anyhow::Error,
}

impl CliError {
    fn validation(source: anyhow::Error) -> Self {
        Self { code: 2, source }
    }
}

impl From<dclab_core::Error> for CliError {
    fn from(e: dclab_core::Error) -> Self {
        let code = if e.is_validation() { 2 } else { 3 };
        Self {
            code,
            source: anyhow::Error::new(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(anyhow::Error::new(e))
    }
}
