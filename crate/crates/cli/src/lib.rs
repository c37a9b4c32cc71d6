//! Command-line front end for `hamepi-core`: JSON configurations in, CSV
//! trajectories and JSON reports out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::Options;
use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "hamepi", version, about = "Hamiltonian structure of compartmental epidemic models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a model; writes trajectory.csv and diagnostics.json
    Simulate(Common),
    /// Exact solution against adaptive integration; writes exact.csv and exact.json
    Exact(Common),
    /// Check Jacobi, Hamilton equations, bi-Hamiltonian pairs and Casimirs
    Verify(Common),
    /// Integrate interacting populations; writes one CSV per population and totals.csv
    Couple(Common),
    /// Run a parameter grid; writes sweep.json
    Sweep(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed for sample points
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sample points for verification
    #[arg(long)]
    pub points: Option<usize>,
    /// Tolerance for verification and the coupling audit
    #[arg(long)]
    pub tol: Option<f64>,
}

type Handler = fn(&RunConfig, &Options) -> Result<()>;

impl Command {
    pub fn run(self) -> Result<()> {
        let (f, common): (Handler, Common) = match self {
            Command::Simulate(c) => (commands::simulate, c),
            Command::Exact(c) => (commands::exact, c),
            Command::Verify(c) => (commands::verify, c),
            Command::Couple(c) => (commands::couple, c),
            Command::Sweep(c) => (commands::sweep, c),
        };
        let cfg = RunConfig::load(&common.config)?;
        let opts = Options {
            out: common.out,
            seed: common.seed,
            points: common.points,
            tol: common.tol,
        };
        f(&cfg, &opts)
    }
}
