use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::diagnostics::{law_distance, LawDistance};
use tclab::market::{build_market, sample_scenarios, simulate_limit, LimitModelParams};

use super::{require_seed, Command, CommonArgs};
use crate::config::Format;
use crate::output;

/// Simulate the stochastic-volatility limit and compare it with sampled trees.
#[derive(Debug, Clone, Args, Serialize)]
pub struct McLimitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Euler steps per path.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tree sizes whose terminal law `(S̃_n, ν̃_n)` is compared with the limit.
    #[arg(long, value_delimiter = ',')]
    pub compare_n: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McLimitConfig {
    pub paths: usize,
    pub steps: usize,
    pub horizon: f64,
    pub seed: Option<u64>,
    pub compare_n: Vec<usize>,
}

impl Default for McLimitConfig {
    fn default() -> Self {
        Self {
            paths: 1000,
            steps: 1000,
            horizon: 1.0,
            seed: None,
            compare_n: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct PathRow {
    path_id: usize,
    #[serde(rename = "nu_T")]
    nu_t: f64,
    #[serde(rename = "s_T")]
    s_t: f64,
}

#[derive(Serialize)]
struct Comparison {
    n: usize,
    #[serde(flatten)]
    distance: LawDistance,
}

#[derive(Serialize)]
struct Summary {
    #[serde(rename = "T")]
    horizon: f64,
    steps: usize,
    paths: usize,
    seed: u64,
    #[serde(rename = "mean_s_T")]
    mean_s: f64,
    #[serde(rename = "std_err_s_T")]
    std_err_s: f64,
    #[serde(rename = "mean_nu_T")]
    mean_nu: f64,
    law_distance: Vec<Comparison>,
}

impl Command for McLimitConfig {
    const NAME: &'static str = "mc-limit";
    const FORMATS: &'static [Format] = &[Format::Csv, Format::Json];

    fn run(&self, format: Format) -> Result<String> {
        let seed = require_seed(self.seed, Self::NAME)?;
        let params = LimitModelParams::new(self.horizon, self.steps, seed);
        let paths = simulate_limit(&params, self.paths)?;
        let terminal: Vec<(f64, f64)> = paths.iter().map(|p| p.terminal()).collect();
        if format == Format::Csv {
            let rows: Vec<PathRow> = terminal
                .iter()
                .enumerate()
                .map(|(i, &(nu, s))| PathRow {
                    path_id: i,
                    nu_t: nu,
                    s_t: s,
                })
                .collect();
            return output::csv(&rows);
        }
        let count = terminal.len() as f64;
        let mean_s = terminal.iter().map(|t| t.1).sum::<f64>() / count;
        let var_s = terminal.iter().map(|t| (t.1 - mean_s).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
        let limit: Vec<Vec<f64>> = terminal.iter().map(|&(nu, s)| vec![s, nu]).collect();
        let law = self
            .compare_n
            .iter()
            .map(|&n| {
                let tree = sample_scenarios(n, self.paths, seed)?
                    .iter()
                    .map(|xi| {
                        let m = build_market(n, self.horizon, xi)?;
                        Ok(vec![m.terminal_price(), m.nu_tilde()[n]])
                    })
                    .collect::<tclab::Result<Vec<_>>>()?;
                Ok(Comparison {
                    n,
                    distance: law_distance(&tree, &limit)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        output::json(Summary {
            horizon: self.horizon,
            steps: self.steps,
            paths: self.paths,
            seed,
            mean_s,
            std_err_s: (var_s / count).sqrt(),
            mean_nu: terminal.iter().map(|t| t.0).sum::<f64>() / count,
            law_distance: law,
        })
    }
}
