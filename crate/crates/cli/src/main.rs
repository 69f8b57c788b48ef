//! `lifisim` command-line tool.
//!
//! Exit codes: 0 success, 2 input error, 3 capacity error, 4 oracle or
//! acceptance failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use lifisim::assembler::DbScale;

/// A check that ran to completion and did not pass.
#[derive(Debug)]
pub struct Failed(pub String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Failed>() {
            return 4;
        }
        if let Some(lifisim::Error::Capacity { .. }) = cause.downcast_ref::<lifisim::Error>() {
            return 3;
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Simulate { scenario, out, sim } => commands::simulate::run(&scenario, &out, &sim),
        Command::Sweep {
            scenario,
            poses,
            query_freq,
            detector,
            out,
            sim,
        } => commands::sweep::run(
            &scenario,
            &poses,
            query_freq,
            detector.as_deref(),
            &out,
            &sim,
        ),
        Command::Heatmap {
            scenario,
            step,
            height,
            detector,
            units,
            out,
        } => commands::heatmap::run(&scenario, step, height, detector.as_deref(), units, &out),
        Command::Compare {
            measured,
            simulated,
            threshold,
            mode,
            component,
            db_convention,
            db_offset,
        } => {
            let scale = DbScale {
                convention: db_convention.into(),
                offset_db: db_offset,
            };
            commands::compare::run(
                &measured,
                &simulated,
                threshold,
                mode.into(),
                &component,
                &scale,
            )
        }
        Command::Oracle {
            scenario,
            max_patches,
            inject_fault,
            tolerance,
        } => commands::oracle::run(&scenario, max_patches, inject_fault, tolerance),
        Command::Bench {
            scenario,
            poses,
            detector,
            cold_runs,
            max_ratio,
            sim,
        } => commands::bench::run(
            &scenario,
            &poses,
            detector.as_deref(),
            cold_runs,
            max_ratio,
            &sim,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
