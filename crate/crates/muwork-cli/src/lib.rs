//! Batch front end for the muwork library.
//!
//! Five subcommands wire the library end to end: `info` (flags, Choi
//! spectrum, fixed-point algebra), `mix` (certified mixing constant plus an
//! explicit mixed-unitary decomposition of `p·Φ + (1−p)·E_A`), `power`
//! (smallest `k` with `Φ^k` certified mixed unitary), `corr` (rank-one
//! decompositions of correlation matrices), and `selftest` (the built-in
//! property suite).
//!
//! Channels and correlation matrices travel as JSON documents with separate
//! row-major `re`/`im` arrays (see `schemas/channel.schema.json` and
//! `schemas/corr.schema.json`); every report validates against
//! `schemas/report.schema.json`. Reports are deterministic: identical inputs
//! and `--seed` reproduce them byte for byte in single-threaded mode, unless
//! `--timing` is passed. The environment variable `MUWORK_TOL_OVERRIDE`
//! scales every internal tolerance by the given factor and is recorded in
//! the report.
//!
//! Exit codes: 0 success/certified, 2 input error, 3 inconclusive,
//! 4 internal numerical failure.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;
pub mod selftest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use muwork::Tol;

use error::CliError;
use report::TimingInfo;

#[derive(Parser)]
#[command(
    name = "muwork",
    version,
    about = "Mixed-unitary structure of quantum channels: reports, certificates, decompositions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    /// Write the JSON report to this path instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall-clock timing in the report (breaks byte reproducibility)
    #[arg(long, global = true)]
    pub timing: bool,
    /// Worker threads; only 1 is supported and larger values are clamped
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Inspect a channel: flags, Choi spectrum, spectral gap, fixed-point algebra
    Info {
        /// Channel JSON file
        channel: PathBuf,
    },
    /// Certify p·Φ + (1−p)·E_A mixed unitary and construct the decomposition
    Mix {
        /// Channel JSON file (must be unital and trace preserving)
        channel: PathBuf,
        /// "auto" (compute the fixed-point algebra) or a path to a blocks JSON file
        #[arg(long, default_value = "auto")]
        algebra: String,
        /// RNG seed; mandatory so runs are reproducible
        #[arg(long)]
        seed: u64,
        /// Residual tolerance the decomposition must meet
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Atom budget for the construction
        #[arg(long = "max-atoms", default_value_t = 500)]
        max_atoms: usize,
    },
    /// Find the smallest k ≤ kmax with Φ^k certified mixed unitary
    Power {
        /// Channel JSON file (must be unital and trace preserving)
        channel: PathBuf,
        /// Largest power to try
        #[arg(long)]
        kmax: usize,
        /// RNG seed; mandatory so runs are reproducible
        #[arg(long)]
        seed: u64,
        /// Residual tolerance the decomposition must meet
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Atom budget per construction
        #[arg(long = "max-atoms", default_value_t = 500)]
        max_atoms: usize,
    },
    /// Decompose a correlation matrix into rank-one unimodular atoms
    Corr {
        /// Correlation-matrix JSON file
        corr: PathBuf,
        /// quadrature: exact 3^d-point scheme for (C+(d−1)I)/d;
        /// rank: (C+(r−1)I)/r from the Gram vectors; z2: sign-vector hull test
        #[arg(long, value_enum)]
        mode: CorrMode,
        /// Residual tolerance for accepting a certificate
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run the built-in property suite and print a pass/fail table
    Selftest {
        /// quick: exact identities; full: adds N = 10⁵ Monte-Carlo checks
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        /// RNG seed; mandatory so runs are reproducible
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum CorrMode {
    Quadrature,
    Rank,
    Z2,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

/// Parse MUWORK_TOL_OVERRIDE: a positive finite factor scaling every
/// tolerance. Absent means 1.
fn tol_from_env() -> Result<(Tol, f64), CliError> {
    match std::env::var("MUWORK_TOL_OVERRIDE") {
        Err(std::env::VarError::NotPresent) => Ok((Tol::default(), 1.0)),
        Err(e) => Err(CliError::Input(format!("MUWORK_TOL_OVERRIDE: {e}"))),
        Ok(s) => {
            let scale: f64 = s.trim().parse().map_err(|_| {
                CliError::Input(format!(
                    "MUWORK_TOL_OVERRIDE must be a positive finite float, got {s:?}"
                ))
            })?;
            if !scale.is_finite() || scale <= 0.0 {
                return Err(CliError::Input(format!(
                    "MUWORK_TOL_OVERRIDE must be a positive finite float, got {s:?}"
                )));
            }
            Ok((Tol::default().scaled(scale), scale))
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let (tol, tol_scale) = tol_from_env()?;
    if cli.threads == 0 {
        return Err(CliError::Input("--threads must be ≥ 1".into()));
    }
    if cli.threads > 1 {
        eprintln!(
            "muwork: note: internal parallelism is not enabled; running with 1 thread \
             (requested {})",
            cli.threads
        );
    }
    let started = std::time::Instant::now();
    let (mut report, code) = match &cli.cmd {
        Cmd::Info { channel } => commands::cmd_info(channel, &tol)?,
        Cmd::Mix {
            channel,
            algebra,
            seed,
            tol: tol_residual,
            max_atoms,
        } => commands::cmd_mix(channel, algebra, *seed, *tol_residual, *max_atoms, &tol)?,
        Cmd::Power {
            channel,
            kmax,
            seed,
            tol: tol_residual,
            max_atoms,
        } => commands::cmd_power(channel, *kmax, *seed, *tol_residual, *max_atoms, &tol)?,
        Cmd::Corr { corr, mode, tol: tol_accept } => {
            commands::cmd_corr(corr, *mode, *tol_accept, &tol)?
        }
        Cmd::Selftest { level, seed } => commands::cmd_selftest(*level, *seed, &tol)?,
    };
    report.threads = 1;
    report.tol_scale = tol_scale;
    if cli.timing {
        report.timing = Some(TimingInfo {
            total_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    let json = report.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, &json).map_err(|e| {
            CliError::Input(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{json}"),
    }
    // the human-readable rendering goes to stderr so stdout stays a single
    // machine-readable document
    eprintln!("{}", report.text);
    Ok(code)
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("muwork: error: {e}");
            e.exit_code()
        }
    }
}
