//! Batch CLI over the half-discrete inequality toolkit.
//!
//! Exit codes: 0 all verdicts true; 1 at least one false; 2 indeterminate
//! present with none false; 3 configuration error; 4 convergence error.

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::RunConfig;
use report::{Report, EXIT_CONFIG, EXIT_CONVERGENCE};

#[derive(Parser)]
#[command(name = "hdhi", version, about = "Half-discrete Hardy-Hilbert inequality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Named preset expanded before overrides (cor51..cor54, remark55).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Scalar override `key.path=value`; repeatable.
    #[arg(long = "set", global = true)]
    sets: Vec<String>,

    /// Write newline-delimited JSON records here.
    #[arg(long, global = true)]
    out: Option<String>,

    /// Quadrature tolerance override.
    #[arg(long = "tol-quad", global = true)]
    tol_quad: Option<f64>,

    /// Series-summation tolerance override.
    #[arg(long = "tol-sum", global = true)]
    tol_sum: Option<f64>,

    /// Seed for randomized property sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Best-possible constant by closed form and by quadrature.
    Constant,
    /// Weight coefficients and their bounds over the configured grid.
    Weights,
    /// Three-relation verification in the regime selected by `p`.
    Verify,
    /// Extremal-family trace toward the constant.
    Sharpness,
    /// Discretized operator-norm ladder.
    Opnorm,
}

fn main() {
    let cli = Cli::parse();
    let cfg = match RunConfig::assemble(
        cli.config.as_deref(),
        cli.preset.as_deref(),
        &cli.sets,
        cli.tol_quad,
        cli.tol_sum,
        cli.seed,
    ) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    };

    let name = match cli.command {
        Command::Constant => "constant",
        Command::Weights => "weights",
        Command::Verify => "verify",
        Command::Sharpness => "sharpness",
        Command::Opnorm => "opnorm",
    };
    let mut report = Report::new(name, &cfg, cli.out);
    let outcome = match cli.command {
        Command::Constant => commands::cmd_constant(&cfg, &mut report),
        Command::Weights => commands::cmd_weights(&cfg, &mut report),
        Command::Verify => commands::cmd_verify(&cfg, &mut report),
        Command::Sharpness => commands::cmd_sharpness(&cfg, &mut report),
        Command::Opnorm => commands::cmd_opnorm(&cfg, &mut report),
    };
    match outcome {
        Ok(()) => std::process::exit(report.finish()),
        Err(hdhi::Error::Domain(msg)) => {
            eprintln!("configuration error: {msg}");
            std::process::exit(EXIT_CONFIG);
        }
        Err(e @ hdhi::Error::Convergence { .. }) => {
            eprintln!("convergence error: {e}");
            std::process::exit(EXIT_CONVERGENCE);
        }
    }
}
