use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::market::{build_market, Scenario};
use tclab::solver::{lookahead_arbitrage, lookahead_profit_mc};

use super::{require, require_seed, Command, CommonArgs};
use crate::config::{parse_signs, Format};
use crate::output;

/// Trade the interpolated price one period ahead of its moves.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ArbitrageArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Sign path such as `+1,-1`; without it, sample scenarios.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArbitrageConfig {
    pub n: Option<usize>,
    pub horizon: f64,
    pub kappa: f64,
    pub xi: Option<String>,
    pub samples: usize,
    pub seed: Option<u64>,
}

impl Default for ArbitrageConfig {
    fn default() -> Self {
        Self {
            n: None,
            horizon: 1.0,
            kappa: 0.0,
            xi: None,
            samples: 1000,
            seed: None,
        }
    }
}

#[derive(Serialize)]
pub struct StrategyRecord {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub holdings: Vec<f64>,
}

#[derive(Serialize)]
struct TraceRow {
    k: usize,
    t: f64,
    #[serde(rename = "S_k")]
    s_k: f64,
    gamma_k: f64,
    #[serde(rename = "V_k")]
    v_k: f64,
}

#[derive(Serialize)]
struct OutcomeDoc {
    n: usize,
    kappa: f64,
    xi: Vec<i8>,
    terminal_wealth: f64,
    strategy: StrategyRecord,
    trace: Vec<TraceRow>,
}

impl Command for ArbitrageConfig {
    const NAME: &'static str = "arbitrage";
    const FORMATS: &'static [Format] = &[Format::Json, Format::Csv];

    fn run(&self, format: Format) -> Result<String> {
        let Some(xi) = &self.xi else {
            let n = require(self.n, "n")?;
            let seed = require_seed(self.seed, Self::NAME)?;
            let sample = lookahead_profit_mc(n, self.horizon, self.kappa, self.samples, seed)?;
            return match format {
                Format::Json => output::json(sample),
                Format::Csv => output::csv(&[sample]),
            };
        };
        let signs = parse_signs(xi)?;
        if let Some(n) = self.n.filter(|&n| n != signs.len()) {
            bail!("--n {n} disagrees with the {} signs of --xi", signs.len());
        }
        let n = signs.len();
        let market = build_market(n, self.horizon, &Scenario::new(signs.clone())?)?;
        let outcome = lookahead_arbitrage(&market, self.kappa)?;
        let grid = *outcome.strategy.grid();
        let trace: Vec<TraceRow> = (0..=grid.steps())
            .map(|k| TraceRow {
                k,
                t: grid.time(k),
                s_k: outcome.prices[k],
                gamma_k: outcome.strategy.holdings()[k],
                v_k: outcome.trace.values[k],
            })
            .collect();
        match format {
            Format::Csv => output::csv(&trace),
            Format::Json => output::json(OutcomeDoc {
                n,
                kappa: self.kappa,
                xi: signs,
                terminal_wealth: outcome.terminal_wealth(),
                strategy: StrategyRecord {
                    n: grid.steps(),
                    horizon: grid.horizon(),
                    holdings: outcome.strategy.holdings().to_vec(),
                },
                trace,
            }),
        }
    }
}
