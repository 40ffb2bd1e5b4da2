use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cusplab::harness::{run_experiment, ExperimentConfig, ExperimentKind, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "cusplab", version, about = "Cusp operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Empirical check of the compatibility conditions
    Compat,
    /// Growth certification of a planted instance
    Bootstrap,
    /// Rate transfer and R-independence of the scalar ODE bounds
    OdeLemma,
    /// Level-torus Poincaré inequality over random flat tori
    PoincareSweep,
    /// Weighted norms across the admissible weights
    NormsSweep,
    /// One experiment per value of a swept parameter
    Sweep,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Self::Compat => ExperimentKind::Compat,
            Self::Bootstrap => ExperimentKind::Bootstrap,
            Self::OdeLemma => ExperimentKind::OdeLemma,
            Self::PoincareSweep => ExperimentKind::PoincareSweep,
            Self::NormsSweep => ExperimentKind::NormsSweep,
            Self::Sweep => ExperimentKind::Sweep,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when absent
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: config `output`, else ./cusplab-out]
    #[arg(long, global = true, env = "CUSPLAB_OUT")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match &cli.common.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => ExperimentConfig::default(),
    };
    config.kind = cli.command.kind();
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    let out = cli
        .common
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("cusplab-out"));

    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    match run_experiment(&config, &out) {
        Ok(outcome) => {
            for c in &outcome.report.certificates {
                println!(
                    "{} {:<32} {:.6e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.tag,
                    c.constant
                );
            }
            println!("report: {}", out.join("report.json").display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e @ cusplab::Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
