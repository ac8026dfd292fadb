//! Subcommands. Each has a flag struct, whose unset fields defer to the
//! config file, and a resolved config with defaults that is echoed into the
//! manifest.

pub mod arbitrage;
pub mod cps;
pub mod market;
pub mod mz;
pub mod predict;
pub mod project;
pub mod simulate;
pub mod solve;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tclab::solver::{SolverConfig, DEFAULT_COST_STEP, DEFAULT_HOLDING_STEP};

use crate::config::Format;

pub trait Command: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;
    /// Supported output formats; the first is the default.
    const FORMATS: &'static [Format];

    fn run(&self, format: Format) -> Result<String>;
}

pub fn check_format<C: Command>(requested: Option<Format>) -> Result<Format> {
    let format = requested.unwrap_or(C::FORMATS[0]);
    if !C::FORMATS.contains(&format) {
        bail!("`{}` does not support --format {}", C::NAME, format.extension());
    }
    Ok(format)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// JSON config file or run manifest; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output file, or `-` for stdout. Defaults to `$TCLAB_OUT_DIR/<command>.<ext>`.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Holding and cost grids of the solvers.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Holding grid step δ.
    #[arg(long)]
    pub holding_step: Option<f64>,
    /// Holding bound Γ; defaults to x / (2κ S_0).
    #[arg(long)]
    pub holding_bound: Option<f64>,
    /// Cost grid step c.
    #[arg(long)]
    pub cost_step: Option<f64>,
    #[arg(long)]
    pub cost_cap: Option<f64>,
    /// Work budget of the dynamic program.
    #[arg(long)]
    pub max_work: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub holding_step: f64,
    pub holding_bound: Option<f64>,
    pub cost_step: f64,
    pub cost_cap: Option<f64>,
    pub max_work: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            holding_step: DEFAULT_HOLDING_STEP,
            holding_bound: None,
            cost_step: DEFAULT_COST_STEP,
            cost_cap: None,
            max_work: SolverConfig::default().max_work,
        }
    }
}

impl GridConfig {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            holding_step: self.holding_step,
            holding_bound: self.holding_bound,
            cost_step: self.cost_step,
            cost_cap: self.cost_cap,
            max_work: self.max_work,
            ..SolverConfig::default()
        }
    }
}

pub fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None => bail!("`{command}` is stochastic and needs --seed"),
    }
}

pub fn require<T: Copy>(value: Option<T>, name: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("missing required parameter --{}", name.replace('_', "-")),
    }
}
