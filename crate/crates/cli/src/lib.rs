//! Command-line front end: argument parsing, command execution and JSON
//! run reports. The binary is a thin wrapper around [`run`].

pub mod args;
pub mod commands;
pub mod error;
pub mod report;

use std::path::Path;
use std::time::Instant;

use args::{Cli, Command};
use commands::Outcome;
use error::{CliError, CliResult};
use report::RunReport;

/// Executes one command on a worker pool of `--jobs` threads, prints the
/// human summary and writes the report if `--out` was given.
pub fn run(cli: &Cli) -> CliResult<RunReport> {
    if cli.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let (name, outcome, out) = pool.install(|| dispatch(&cli.command))?;
    let report = RunReport {
        command: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: outcome.seed,
        wall_time_ms: start.elapsed().as_millis() as u64,
        config_echo: outcome.config,
        results: outcome.results,
    };
    print!("{}", outcome.summary);
    if let Some(path) = out {
        report.write(path)?;
    }
    Ok(report)
}

fn dispatch(command: &Command) -> CliResult<(&'static str, Outcome, Option<&Path>)> {
    Ok(match command {
        Command::Test(a) => ("test", commands::test::execute(&commands::test::resolve(a)?)?, a.out.as_deref()),
        Command::Cluster(a) => ("cluster", commands::cluster::execute(&commands::cluster::resolve(a)?)?, a.out.as_deref()),
        Command::Benchmark(a) => {
            let (outcome, results) = commands::benchmark::execute(&commands::benchmark::resolve(a)?)?;
            if let Some(path) = &a.csv {
                commands::benchmark::write_pair_csv(path, &results)?;
            }
            if let Some(path) = &a.reps_csv {
                commands::benchmark::write_replication_csv(path, &results)?;
            }
            ("benchmark", outcome, a.out.as_deref())
        }
        Command::Simulate(a) => {
            let config = commands::simulate::resolve(a)?;
            ("simulate", commands::simulate::execute(&config, a.data.as_deref(), a.table.as_deref())?, a.out.as_deref())
        }
    })
}
