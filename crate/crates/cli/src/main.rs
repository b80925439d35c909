//! `cosdyn`: runs scenario files and writes report.json, decay.csv and
//! manifest.json.
//!
//! Exit codes: 0 on completion, 2 on parameter or I/O errors, 3 when every
//! check ran out of budget without a verdict (or a construction was refused).

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cosdyn::NumericMode;

use crate::config::{Command, Scenario};

#[derive(Parser)]
#[command(name = "cosdyn", version, about = "Cosine operator sequence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the command named in the config
    Run(Args),
    /// Run every criterion check
    Check(Args),
    /// Build a transitivity witness and trace its orbit
    DemoWitness(Args),
    /// Build a truncated periodic point and measure its residuals
    DemoPeriodic(Args),
    /// Run the checks over a grid of weight parameters
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    config: PathBuf,
    /// Output directory (overrides `output_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest n examined by the checks
    #[arg(long)]
    budget_n: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

fn load(args: &Args, forced: Option<Command>) -> Result<(Scenario, String), String> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let mut scenario = Scenario::parse(Path::new(&args.config), &text).map_err(|e| e.to_string())?;
    if let Some(c) = forced {
        scenario.command = c;
    }
    if let Some(out) = &args.out {
        scenario.output_dir = out.clone();
    }
    if let Some(n) = args.budget_n {
        scenario.budget.max_n = n;
    }
    if let Some(tol) = args.tol {
        scenario.budget.tol = tol;
    }
    if let Some(mode) = args.mode {
        scenario.mode = match mode {
            Mode::Exact => NumericMode::Exact,
            Mode::Float => NumericMode::Float,
        };
    }
    scenario.budget.validate().map_err(|e| format!("{}: {e}", args.config.display()))?;
    Ok((scenario, text))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, forced) = match &cli.command {
        Cmd::Run(a) => (a, None),
        Cmd::Check(a) => (a, Some(Command::Check)),
        Cmd::DemoWitness(a) => (a, Some(Command::WitnessDemo)),
        Cmd::DemoPeriodic(a) => (a, Some(Command::PeriodicDemo)),
        Cmd::Sweep(a) => (a, Some(Command::Sweep)),
    };
    let (scenario, text) = match load(args, forced) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run::run(&scenario, &text) {
        Ok(status) => {
            println!("{}: {:?} -> {}", scenario.source_path.display(), status, scenario.output_dir.display());
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
