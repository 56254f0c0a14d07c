use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stayswitch::experiments::{self, Report};
use stayswitch::scenario::{Axis, Scenario};
use stayswitch::sim::Mode;
use stayswitch::Error;

/// Stay-or-switch channel access: policy tables, simulations and sweeps.
#[derive(Debug, Parser)]
#[command(name = "stayswitch", version)]
struct Cli {
    /// Base seed; replication r runs with seed * 1000000 + r.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV output.
    #[arg(long, global = true, env = "STAYSWITCH_OUT_DIR", default_value = "results")]
    out: PathBuf,

    /// Channel access model used by the simulator.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,

    /// Number of replications per scheme and point.
    #[arg(long, global = true)]
    replications: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the policy table for a user sensing channels in file order.
    Policy { scenario: PathBuf },
    /// Simulate the scenario's base point.
    Simulate { scenario: PathBuf },
    /// Simulate every point of a parameter grid.
    Sweep {
        scenario: PathBuf,
        /// Swept parameter: G (offered load), T (transmission time) or N (channels).
        #[arg(long, value_parser = parse_axis)]
        axis: Option<Axis>,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        grid: Option<Vec<f64>>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario, Error> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = cli.seed {
        s.system.seed = seed;
    }
    if let Some(mode) = cli.mode {
        s.system.mode = mode;
    }
    if let Some(r) = cli.replications {
        s.compare.replications = r;
    }
    s.validate()?;
    Ok(s)
}

fn finish(report: &Report, scenario: &Scenario, dir: &Path) -> Result<(), Error> {
    print!("{}", experiments::summary_text(report));
    for path in experiments::write_report(report, dir, scenario.system.users)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Policy { scenario } => {
            let s = load(cli, scenario)?;
            let rows = experiments::policy_tables(&s)?;
            print!("{}", experiments::policy_text(&rows));
            let path = experiments::write_policy(&rows, &cli.out.join(format!("{}-policy", s.name)))?;
            println!("wrote {}", path.display());
        }
        Command::Simulate { scenario } => {
            let s = load(cli, scenario)?;
            let report = experiments::simulate(&s)?;
            finish(&report, &s, &cli.out.join(format!("{}-simulate", s.name)))?;
        }
        Command::Sweep { scenario, axis, grid } => {
            let s = load(cli, scenario)?;
            let report = experiments::sweep(&s, *axis, grid.as_deref())?;
            let axis = axis.or(s.sweep.as_ref().map(|w| w.axis)).expect("sweep resolved an axis");
            finish(&report, &s, &cli.out.join(format!("{}-sweep-{axis}", s.name)))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Scenario(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
