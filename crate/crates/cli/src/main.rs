#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod error;
mod report;
mod systems;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Context, Outcome};
use config::ConfigFile;
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let resolved = config::resolve(&cli.global, &file)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = resolved.jobs {
        pool = pool.num_threads(jobs);
    }
    let ctx = Context {
        tolerances: resolved.tolerances,
        pool: pool
            .build()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?,
    };
    let name = cli.command.name();
    let section = file.section(name);
    let Outcome { report, failure } = match &cli.command {
        Command::Roots(a) => commands::roots(&config::merge(a, section, name)?, &ctx)?,
        Command::Scan(a) => commands::scan(&config::merge(a, section, name)?, &ctx)?,
        Command::Certify(a) => commands::certify(&config::merge(a, section, name)?, &ctx)?,
        Command::Simulate(a) => commands::simulate(&config::merge(a, section, name)?, &ctx)?,
        Command::Pde(a) => commands::pde(&config::merge(a, section, name)?, &ctx)?,
        Command::Weak(a) => commands::weak(&config::merge(a, section, name)?, &ctx)?,
    };
    let text = report.render(resolved.format);
    match &resolved.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::invalid(format!("cannot write output: {e}")))?;
        }
    }
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
