//! Binary entry point: parse flags, dispatch, print, map errors to exit
//! codes. All behavior lives in the library so it stays testable.

use std::io::Write;

use clap::Parser;

use fred_cli::config::{resolve_seed, RunConfig};
use fred_cli::{cmd_compute, cmd_rank, run_bench, BenchParams, Cli, CliError, Command};

fn run(cli: &Cli) -> Result<(String, String), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Compute(args) => {
            let outcome = cmd_compute(args)?;
            Ok((outcome.stdout, outcome.stderr))
        }
        Command::Rank(args) => {
            let outcome = cmd_rank(args)?;
            Ok((outcome.stdout, outcome.stderr))
        }
        Command::SynthBench(args) => {
            let seed = resolve_seed(args.seed, &RunConfig::default())?;
            let outcome = run_bench(&BenchParams::from_args(args, seed))?;
            Ok((outcome.stdout, outcome.stderr))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((stdout, stderr)) => {
            if !stderr.is_empty() {
                let _ = std::io::stderr().write_all(stderr.as_bytes());
            }
            let _ = std::io::stdout().write_all(stdout.as_bytes());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
