use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod report;
mod scenario;

use commands::{Context, Outcome};
use scenario::{resolve_constants, Scenario, ValidationError};

/// Dirac–Klein–Gordon simulator with Gevrey-radius bookkeeping.
#[derive(Parser)]
#[command(name = "dkg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, env = "DKG_OUT")]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with calibrated `c0` and `big_c`.
    #[arg(long)]
    constants: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario and write the norm ledger.
    Evolve(RunArgs),
    /// Certified against measured radius at several final times.
    Radius(RunArgs),
    /// Picard contraction on the first window.
    Picard(RunArgs),
    /// Estimate checks on the sample library.
    Checks(RunArgs),
    /// Compute the radius certificate and verify it along a run.
    Certify(RunArgs),
    /// Calibrate `c0` and `C` on the sample library.
    Calibrate(RunArgs),
    /// Summarise result files.
    Report {
        files: Vec<PathBuf>,
    },
}

fn context(args: &RunArgs) -> Result<Context> {
    let scenario = Scenario::load(&args.scenario)?;
    let constants = resolve_constants(&scenario, args.constants.as_deref())?;
    Ok(Context {
        out: commands::out_dir(args.out.as_deref(), &scenario),
        seed: args.seed.unwrap_or(scenario.seed),
        scenario,
        constants,
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    let (args, f): (&RunArgs, fn(&Context) -> Result<Outcome>) = match &cli.command {
        Command::Report { files } => return report::report(files),
        Command::Evolve(a) => (a, commands::evolve),
        Command::Radius(a) => (a, commands::radius),
        Command::Picard(a) => (a, commands::picard),
        Command::Checks(a) => (a, commands::checks),
        Command::Certify(a) => (a, commands::certify),
        Command::Calibrate(a) => (a, commands::calibrate),
    };
    f(&context(args)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Pass(msg)) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Fail(msg)) => {
            println!("FAILED: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            if let Some(v) = e.downcast_ref::<ValidationError>() {
                let body = serde_json::json!({
                    "status": "error",
                    "kind": "validation",
                    "field": v.field,
                    "message": v.message,
                });
                eprintln!("{body}");
                ExitCode::from(2)
            } else {
                let body = serde_json::json!({
                    "status": "error",
                    "kind": "runtime",
                    "message": format!("{e:#}"),
                });
                eprintln!("{body}");
                ExitCode::from(3)
            }
        }
    }
}
