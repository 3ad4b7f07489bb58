//! `distal`: command-line driver for triangularization, torus orbits,
//! weight sequences and Weyl-sum experiments.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "distal", version, about = "Exact unipotent dynamics and Weyl-sum disjointness experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conjugate a (negative-)unipotent integer matrix to upper triangular form.
    Triangularize {
        /// Matrix JSON: {"rows","cols","entries"} or an array of rows; `-` reads stdin.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form orbit polynomials of a unipotent rational flow.
    Orbit {
        /// Flow JSON: {"A": matrix, "a": [shift]}.
        #[arg(long)]
        flow: PathBuf,
        /// Starting point, comma separated, e.g. `0,1/2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<String>,
        /// Also report T^n x for these n.
        #[arg(long, value_delimiter = ',')]
        at: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a 2x2 affine flow (distal unipotent, equicontinuous, positive entropy).
    Classify {
        /// Flow JSON or matrix JSON.
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Möbius values mu(1..=N) as signed bytes (or CSV).
    Mobius {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = MobiusFormat::Bytes)]
        format: MobiusFormat,
    },
    /// Weight sequences.
    Seq {
        #[command(subcommand)]
        kind: SeqCommand,
    },
    /// Weighted Weyl sum with a polynomial phase.
    Weyl(RunArgs),
    /// Weak/strong higher-order oscillation probe.
    Probe(RunArgs),
    /// Disjointness averages S_N(x) for a trigonometric observable under a flow.
    Disjoint(RunArgs),
    /// Run the built-in invariant suite.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MobiusFormat {
    Bytes,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum SeqCommand {
    /// c_n = exp(2 pi i alpha beta^n g(beta)), n = 1..=N, as CSV `n,re,im`.
    Geometric {
        /// `p/q`, decimal, or `sqrt(r)`.
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        beta: String,
        /// const1, identity, log or power(gamma).
        #[arg(long, default_value = "const1")]
        g: String,
        #[arg(long)]
        n: u64,
        /// Fractional bits; raised automatically to what N needs.
        #[arg(long, default_value_t = 128)]
        precision: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config JSON (see docs/config.md).
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core. Never changes the output bytes.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Failure classes with their exit codes and stderr prefixes.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Compute(anyhow::Error),
}

impl Failure {
    fn report(&self) -> ExitCode {
        match self {
            Failure::Validation(e) => {
                eprintln!("E_VALIDATION: {e:#}");
                ExitCode::from(1)
            }
            Failure::Compute(e) => {
                eprintln!("E_COMPUTE: {e:#}");
                ExitCode::from(2)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            eprint!("E_VALIDATION: {text}");
            return ExitCode::from(1);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
