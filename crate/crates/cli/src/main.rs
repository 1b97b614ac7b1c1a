//! `perpetuity`: batch front end for size-biased perpetuity computations.
//!
//! Exit codes: 0 success; 1 malformed or missing input, checksum mismatch;
//! 2 no non-zero solution for the multiplier law (or a violated contraction
//! precondition); 3 solver did not converge; 4 a verification check failed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] perpetuity_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(perpetuity_core::Error::ExistenceGate { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "perpetuity",
    version,
    about = "Solve and verify size-biased perpetuities"
)]
struct Cli {
    /// Config file of `key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Shorthand for `--set mc.seed=N`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shorthand for `--set output.dir=DIR`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Lst,
    Mc,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Existence, tail, determinacy and moment classification.
    Diagnose,
    /// The dual response function as steps and a plottable curve.
    Response,
    /// Compute the solution.
    Solve {
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Exact integer moments.
    Moments {
        #[arg(long)]
        order: Option<u32>,
    },
    /// Levy measure estimate and Steutel check.
    Levy,
    /// Perpetuity identity, Steutel relation and contraction sweep.
    Verify {
        /// Replace the multiplier law by the point mass at 1 in the identity check.
        #[arg(long)]
        negative_control: bool,
    },
    /// Contraction ratio of one transform step under r_q.
    Metric {
        #[arg(long)]
        q: Option<f64>,
    },
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("mc.seed={seed}"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", out.display()));
    }
    match &cli.command {
        Command::Solve { method: Some(m) } => {
            let m = match m {
                MethodArg::Lst => "lst",
                MethodArg::Mc => "mc",
                MethodArg::Both => "both",
            };
            overrides.push(format!("solve.method={m}"));
        }
        Command::Moments { order: Some(n) } => overrides.push(format!("moments.order={n}")),
        Command::Verify {
            negative_control: true,
        } => overrides.push("verify.negative_control=true".into()),
        Command::Metric { q: Some(q) } => overrides.push(format!("metric.q={q}")),
        _ => {}
    }
    Settings::load(cli.config.as_deref(), &overrides)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let s = settings(cli)?;
    match cli.command {
        Command::Diagnose => commands::diagnose(&s),
        Command::Response => commands::response(&s),
        Command::Solve { .. } => commands::solve(&s),
        Command::Moments { .. } => commands::moments(&s),
        Command::Levy => commands::levy(&s),
        Command::Verify { .. } => commands::verify(&s),
        Command::Metric { .. } => commands::metric(&s),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
