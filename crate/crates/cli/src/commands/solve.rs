use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::market::PriceTree;
use tclab::paths::TimeGrid;
use tclab::solver::{
    brute_force_value, convergence_table, dp_value, ext_real, SolverKind, ValueReport,
};
use tclab::utility::UtilitySpec;

use super::{require, Command, CommonArgs, GridArgs, GridConfig};
use crate::config::Format;
use crate::output;

fn default_utility() -> UtilitySpec {
    UtilitySpec::Shortfall { strike: 1.0 }
}

/// Maximize expected utility on the capped-volatility tree or a tree file.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    /// `shortfall:K=1`, `power:alpha=0.5` or `log`.
    #[arg(long)]
    pub utility: Option<UtilitySpec>,
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// JSON price tree `{"horizon": T, "levels": [[S_0], [..], ..]}`.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Include the per-scenario policy in the report.
    #[arg(long)]
    pub include_policy: bool,
    /// Recorded in the manifest; the solvers are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "dp" => Ok(SolverKind::Dp),
        "brute" => Ok(SolverKind::Brute),
        _ => Err(format!("unknown solver `{s}`; expected dp or brute")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub n: Option<usize>,
    pub horizon: f64,
    pub kappa: f64,
    pub x: f64,
    pub utility: UtilitySpec,
    pub solver: SolverKind,
    pub tree: Option<PathBuf>,
    pub include_policy: bool,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub grid: GridConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            n: None,
            horizon: 1.0,
            kappa: 0.05,
            x: 0.1,
            utility: default_utility(),
            solver: SolverKind::Dp,
            tree: None,
            include_policy: false,
            seed: None,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Deserialize)]
struct TreeFile {
    horizon: f64,
    levels: Vec<Vec<f64>>,
}

impl SolveConfig {
    fn tree(&self) -> Result<PriceTree> {
        let Some(path) = &self.tree else {
            return Ok(PriceTree::capped(require(self.n, "n")?, self.horizon)?);
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read tree file {}", path.display()))?;
        let file: TreeFile = serde_json::from_str(&text)
            .with_context(|| format!("invalid tree file {}", path.display()))?;
        let n = file.levels.len().saturating_sub(1);
        if let Some(m) = self.n.filter(|&m| m != n) {
            bail!("--n {m} disagrees with the {n} periods of the tree file");
        }
        Ok(PriceTree::from_levels(TimeGrid::new(n, file.horizon)?, file.levels)?)
    }

    pub fn report(&self) -> Result<ValueReport> {
        let tree = self.tree()?;
        let cfg = self.grid.solver_config();
        let mut report = match self.solver {
            SolverKind::Dp => dp_value(&tree, &self.utility, self.x, self.kappa, &cfg)?,
            SolverKind::Brute => brute_force_value(&tree, &self.utility, self.x, self.kappa, &cfg)?,
        };
        if !self.include_policy {
            report.policy = None;
        }
        Ok(report)
    }
}

#[derive(Serialize)]
struct ValueRow {
    n: usize,
    kappa: f64,
    x: f64,
    utility: String,
    solver: &'static str,
    value: f64,
    policy_value: Option<f64>,
    no_trade_value: f64,
    states_visited: u64,
}

impl Command for SolveConfig {
    const NAME: &'static str = "solve";
    const FORMATS: &'static [Format] = &[Format::Json, Format::Csv];

    fn run(&self, format: Format) -> Result<String> {
        let report = self.report()?;
        match format {
            Format::Json => output::json(report),
            Format::Csv => output::csv(&[ValueRow {
                n: report.n,
                kappa: report.kappa,
                x: report.x,
                utility: report.utility.to_string(),
                solver: match report.solver {
                    SolverKind::Dp => "dp",
                    SolverKind::Brute => "brute",
                },
                value: report.value,
                policy_value: report.policy_value,
                no_trade_value: report.no_trade_value,
                states_visited: report.states_visited,
            }]),
        }
    }
}

/// Solve for each n of a list and tabulate successive differences.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub utility: Option<UtilitySpec>,
    /// Fill the runtime column; the output then varies between runs.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergeConfig {
    pub n_list: Vec<usize>,
    pub horizon: f64,
    pub kappa: f64,
    pub x: f64,
    pub utility: UtilitySpec,
    pub timing: bool,
    #[serde(flatten)]
    pub grid: GridConfig,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            n_list: vec![2, 4, 6, 8, 10, 12],
            horizon: 1.0,
            kappa: 0.05,
            x: 0.1,
            utility: default_utility(),
            timing: false,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Serialize)]
struct ConvergenceCsvRow {
    n: usize,
    kappa: f64,
    x: f64,
    value: f64,
    diff_prev: Option<f64>,
    runtime_ms: Option<u64>,
    states_visited: u64,
}

#[derive(Serialize)]
struct ConvergenceJsonRow {
    n: usize,
    kappa: f64,
    x: f64,
    #[serde(with = "ext_real")]
    value: f64,
    diff_prev: Option<f64>,
    runtime_ms: Option<u64>,
    states_visited: u64,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ConvergenceDoc {
    rows: Vec<ConvergenceJsonRow>,
}

impl Command for ConvergeConfig {
    const NAME: &'static str = "converge";
    const FORMATS: &'static [Format] = &[Format::Csv, Format::Json];

    fn run(&self, format: Format) -> Result<String> {
        let rows = convergence_table(
            &self.n_list,
            self.horizon,
            &self.utility,
            self.x,
            self.kappa,
            &self.grid.solver_config(),
        )?;
        let runtime = |ms: u64| self.timing.then_some(ms);
        match format {
            Format::Json => output::json(ConvergenceDoc {
                rows: rows
                    .into_iter()
                    .map(|r| ConvergenceJsonRow {
                        n: r.n,
                        kappa: r.kappa,
                        x: r.x,
                        value: r.value,
                        diff_prev: r.diff_prev,
                        runtime_ms: runtime(r.runtime_ms),
                        states_visited: r.states_visited,
                        warnings: r.warnings,
                    })
                    .collect(),
            }),
            Format::Csv => output::csv(
                &rows
                    .iter()
                    .map(|r| ConvergenceCsvRow {
                        n: r.n,
                        kappa: r.kappa,
                        x: r.x,
                        value: r.value,
                        diff_prev: r.diff_prev,
                        runtime_ms: runtime(r.runtime_ms),
                        states_visited: r.states_visited,
                    })
                    .collect::<Vec<_>>(),
            ),
        }
    }
}
