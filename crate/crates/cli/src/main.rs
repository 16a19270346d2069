use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use duality_lab::{list_scenarios, resolve_threads, run, CliResult, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "duality-lab", version, about = "Run estimation/control duality scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        /// Scenario file (TOML, or JSON by extension).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Monte-Carlo worker threads (falls back to DUALITY_LAB_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the registered scenarios.
    List,
}

fn print_list() {
    let rows = list_scenarios();
    let w_name = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let w_anchor = rows.iter().map(|r| r.anchor.len()).max().unwrap_or(0);
    for r in rows {
        println!("{:w_name$}  {:w_anchor$}  {}  [requires: {}]", r.name, r.anchor, r.description, r.required);
    }
}

fn execute(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::List => {
            print_list();
            Ok(true)
        }
        Command::Run { config, out, seed, threads } => {
            let threads = resolve_threads(threads)?;
            let report = run(&config, &out, RunOptions { seed_override: seed, threads })?;
            print!("{}", report.summary());
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("duality-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
