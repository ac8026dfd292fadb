//! `tclab`: experiment harness for transaction-cost hedging on scenario trees.
//!
//! Exit codes: 0 on success, 1 on invalid input or I/O failure, 2 when a
//! computation exceeds its resource limits.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::arbitrage::{ArbitrageArgs, ArbitrageConfig};
use commands::cps::{CheckCpsArgs, CheckCpsConfig};
use commands::market::{GenMarketArgs, GenMarketConfig};
use commands::mz::{MzDistArgs, MzDistConfig};
use commands::predict::{PredictArgs, PredictConfig};
use commands::project::{ProjectArgs, ProjectConfig};
use commands::simulate::{McLimitArgs, McLimitConfig};
use commands::solve::{ConvergeArgs, ConvergeConfig, SolveArgs, SolveConfig};
use commands::{check_format, Command, CommonArgs};

#[derive(Parser)]
#[command(name = "tclab", version, about = "Transaction-cost hedging experiments on binary scenario trees")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    GenMarket(GenMarketArgs),
    Solve(SolveArgs),
    Converge(ConvergeArgs),
    CheckCps(CheckCpsArgs),
    MzDist(MzDistArgs),
    Predict(PredictArgs),
    Project(ProjectArgs),
    Arbitrage(ArbitrageArgs),
    McLimit(McLimitArgs),
}

fn execute<C: Command>(common: &CommonArgs, flags: &impl Serialize) -> Result<()> {
    let file = common
        .config
        .as_deref()
        .map(|p| config::load_file(p, C::NAME))
        .transpose()?;
    let (shared, cfg): (config::Common, C) = config::resolve(file, flags)?;
    let format = check_format::<C>(shared.format)?;
    if let Some(threads) = shared.threads {
        anyhow::ensure!(threads > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    let dest = output::destination(&shared, C::NAME, format);
    let body = cfg.run(format)?;
    output::emit(&dest, &body, C::NAME, config::echo(&shared, &cfg)?)
}

fn dispatch(cmd: &Cmd) -> Result<()> {
    match cmd {
        Cmd::GenMarket(a) => execute::<GenMarketConfig>(&a.common, a),
        Cmd::Solve(a) => execute::<SolveConfig>(&a.common, a),
        Cmd::Converge(a) => execute::<ConvergeConfig>(&a.common, a),
        Cmd::CheckCps(a) => execute::<CheckCpsConfig>(&a.common, a),
        Cmd::MzDist(a) => execute::<MzDistConfig>(&a.common, a),
        Cmd::Predict(a) => execute::<PredictConfig>(&a.common, a),
        Cmd::Project(a) => execute::<ProjectConfig>(&a.common, a),
        Cmd::Arbitrage(a) => execute::<ArbitrageConfig>(&a.common, a),
        Cmd::McLimit(a) => execute::<McLimitConfig>(&a.common, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let limited = err
        .chain()
        .filter_map(|e| e.downcast_ref::<tclab::Error>())
        .any(tclab::Error::is_resource_limit);
    if limited {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
