//! Command-line front end for `inclusion-degree`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ProblemConfig;

/// Exit status for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failed checks.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "indeg", version, about = "Degree and persistence computations for the Neumann inclusion problem")]
pub struct Cli {
    /// Problem configuration (TOML); defaults are used when omitted.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the output directory of the configuration.
    #[arg(short, long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural checks of the discretization and the configured family.
    Check,
    /// Degree of L_h - lambda C_h on the constraint ball.
    Degree {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// Trace the persistence sets and write gamma.csv, sigma.csv and summary.json.
    Trace,
    /// Certify that sampled selections lie within eps of the graph.
    Approx {
        #[arg(long)]
        eps: f64,
    },
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return e.exit_code();
        }
    };
    let mut cfg = match &cli.config {
        Some(path) => match ProblemConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(err, "error: {e:#}");
                return EXIT_USAGE;
            }
        },
        None => ProblemConfig::default(),
    };
    if let Some(dir) = cli.out_dir {
        cfg.output.dir = dir;
    }
    let status = match cli.command {
        Command::Check => commands::check(&cfg, out),
        Command::Degree { lambda } => {
            if !lambda.is_finite() {
                let _ = writeln!(err, "error: lambda must be finite");
                return EXIT_USAGE;
            }
            commands::degree(&cfg, lambda, out)
        }
        Command::Trace => commands::trace(&cfg, out),
        Command::Approx { eps } => {
            if !(eps >= 0.0 && eps.is_finite()) {
                let _ = writeln!(err, "error: eps must be finite and >= 0");
                return EXIT_USAGE;
            }
            commands::approx(&cfg, eps, out)
        }
    };
    match status {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}
