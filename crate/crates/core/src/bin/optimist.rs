//! `optimist`: run a scenario file and write its CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use optimist::scenario::{execute, load_scenario, Command, RunError, RunOptions};
use optimist::superquantile::Method;

#[derive(Debug, Parser)]
#[command(name = "optimist", version, about = "Optimistic choice via superquantile utilities")]
struct Cli {
    /// One of: choose, sweep, entry, belief, superquantile
    command: String,

    /// Scenario file (`key = value` lines)
    #[arg(long)]
    scenario: PathBuf,

    /// Write the CSV here instead of the scenario's `output` (or stdout)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Replace the alpha grid (or belief z grid) with N points
    #[arg(long, value_name = "N")]
    grid: Option<usize>,

    /// Engine: auto, closed, average, rockafellar, conditional or mc
    #[arg(long)]
    method: Option<String>,

    /// Use the published Pareto factor (1 - 1/beta) instead of beta/(beta - 1)
    #[arg(long)]
    paper_variant_pareto: bool,
}

fn run(cli: Cli) -> Result<Vec<String>, RunError> {
    let command: Command = cli.command.parse()?;
    let method = cli.method.as_deref().map(str::parse::<Method>).transpose()?;
    let scenario = load_scenario(&cli.scenario)?;
    let opts = RunOptions {
        command: Some(command),
        grid: cli.grid,
        method,
        paper_variant_pareto: cli.paper_variant_pareto,
    };
    execute(&scenario, &opts, cli.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
