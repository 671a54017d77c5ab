//! `corrupt-max`: generate instances, run trials, sweep benchmarks and
//! check the query-count theorems from the command line.
//!
//! Exit codes: 0 success, 1 assertion or containment failure (or I/O error),
//! 2 configuration error, 3 query budget exhausted.

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError { code: 1, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "corrupt-max", version, about = "Maximum-finding with adversarially corrupted comparisons")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an instance file and print its uncorrupted maximum.
    Gen(GenArgs),
    /// Run one trial and print the result as JSON.
    Run(RunArgs),
    /// Sweep (n, k, c, algorithm) and write CSV/JSON success statistics.
    Bench(BenchArgs),
    /// Check theorem-level claims.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// random | cyclic | ascending | shuffled-cyclic
    pub family: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corrupted-edge policy for the random family: allwin | alllose | seeded
    #[arg(long)]
    pub policy: Option<String>,
    /// Output file; the instance goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// rank | det | par | subset
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Read the instance from a file instead of generating it.
    #[arg(long)]
    pub instance: Option<String>,
    /// Also write the JSON result to this path.
    #[arg(long)]
    pub json: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated list.
    #[arg(long)]
    pub n: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    pub k: Option<String>,
    /// Comma-separated list; only used by `par`.
    #[arg(long)]
    pub c: Option<String>,
    /// Comma-separated list of rank | det | par | subset.
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub csv: Option<String>,
    #[arg(long)]
    pub json: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Run an algorithm against the lower-bound adversary under a budget.
    LbDet(LbDetArgs),
    /// Check det_max_find's exact query count over an (n, k) grid.
    Formulas(FormulasArgs),
    /// Check rotation symmetry and out-degree of the symmetric cycles.
    Symmetry(SymmetryArgs),
}

#[derive(Debug, Args)]
pub struct LbDetArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for first.txt, second.txt and transcript.txt.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct FormulasArgs {
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[arg(long)]
    pub k_max: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli
        .config
        .as_deref()
        .map(Config::load)
        .transpose()
        .and_then(|cfg| commands::dispatch(cli.command, &cfg.unwrap_or_default()));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
