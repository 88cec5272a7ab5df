//! Command-line front end: configuration, output files and the subcommands.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "dftr",
    version,
    about = "Boundary-controlled tubular reactor toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the steady-state profile.
    Steady(Common),
    /// Simulate the closed-loop deviation dynamics.
    Simulate(Common),
    /// Estimate decay rates over a grid of reaction orders and gains.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated reaction orders.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<f64>>,
        /// Comma-separated feedback gains.
        #[arg(long, value_delimiter = ',')]
        alpha_list: Option<Vec<f64>>,
    },
    /// Run the numerical consistency checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Seed for the random dissipativity vectors.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Worker cap from `DFTR_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("DFTR_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    use commands::Inputs;
    match cli.command {
        Command::Steady(c) => commands::steady(&Inputs {
            config_path: &c.config,
            out: &c.out,
        }),
        Command::Simulate(c) => commands::simulate_cmd(&Inputs {
            config_path: &c.config,
            out: &c.out,
        }),
        Command::Sweep {
            common,
            n_list,
            alpha_list,
        } => {
            let n = n_list.unwrap_or_else(|| commands::DEFAULT_N_LIST.to_vec());
            let a = alpha_list.unwrap_or_else(|| commands::DEFAULT_ALPHA_LIST.to_vec());
            commands::sweep_cmd(
                &Inputs {
                    config_path: &common.config,
                    out: &common.out,
                },
                &n,
                &a,
                thread_cap(),
            )
        }
        Command::Verify { common, seed } => commands::verify(
            &Inputs {
                config_path: &common.config,
                out: &common.out,
            },
            seed,
        ),
    }
}
