use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::market::{
    build_market, enumerate_tree_capped, sample_scenarios, DiscreteMarket, Scenario,
    DEFAULT_ENUMERATION_CAP,
};

use super::{require, require_seed, Command, CommonArgs};
use crate::config::{parse_signs, Format};
use crate::output;

/// Build markets for one sign path, all sign paths, or a seeded sample.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GenMarketArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
    /// Sign path such as `+1,-1`; its length sets n.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    /// Draw this many sign paths instead of enumerating.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub enumeration_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenMarketConfig {
    pub n: Option<usize>,
    pub horizon: f64,
    pub xi: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub enumeration_cap: usize,
}

impl Default for GenMarketConfig {
    fn default() -> Self {
        Self {
            n: None,
            horizon: 1.0,
            xi: None,
            samples: None,
            seed: None,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MarketRecord {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub scenario_id: u64,
    pub prob: f64,
    pub xi: Vec<i8>,
    pub s_tilde: Vec<f64>,
    pub nu_tilde: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub cap: f64,
}

impl From<&DiscreteMarket> for MarketRecord {
    fn from(m: &DiscreteMarket) -> Self {
        Self {
            n: m.n(),
            horizon: m.grid.horizon(),
            scenario_id: m.scenario.index(),
            prob: m.scenario.probability(),
            xi: m.scenario.signs().to_vec(),
            s_tilde: m.s_tilde.clone(),
            nu_tilde: m.nu_tilde().to_vec(),
            x1: m.x1.values().to_vec(),
            x2: m.x2.values().to_vec(),
            cap: m.cap,
        }
    }
}

#[derive(Debug, Serialize)]
struct TerminalRow {
    scenario_id: u64,
    prob: f64,
    #[serde(rename = "s_T")]
    s_t: f64,
    #[serde(rename = "x1_T")]
    x1_t: f64,
    #[serde(rename = "x2_T")]
    x2_t: f64,
}

#[derive(Serialize)]
struct MarketSet {
    n: usize,
    #[serde(rename = "T")]
    horizon: f64,
    markets: Vec<MarketRecord>,
}

impl GenMarketConfig {
    fn markets(&self) -> Result<Vec<DiscreteMarket>> {
        if let Some(xi) = &self.xi {
            let signs = parse_signs(xi)?;
            if let Some(n) = self.n.filter(|&n| n != signs.len()) {
                bail!("--n {n} disagrees with the {} signs of --xi", signs.len());
            }
            if self.samples.is_some() {
                bail!("--xi and --samples are mutually exclusive");
            }
            let n = signs.len();
            return Ok(vec![build_market(n, self.horizon, &Scenario::new(signs)?)?]);
        }
        let n = require(self.n, "n")?;
        match self.samples {
            Some(count) => {
                let seed = require_seed(self.seed, GenMarketConfig::NAME)?;
                sample_scenarios(n, count, seed)?
                    .iter()
                    .map(|xi| Ok(build_market(n, self.horizon, xi)?))
                    .collect()
            }
            None => Ok(enumerate_tree_capped(n, self.horizon, self.enumeration_cap)?
                .markets()
                .to_vec()),
        }
    }
}

impl Command for GenMarketConfig {
    const NAME: &'static str = "gen-market";
    const FORMATS: &'static [Format] = &[Format::Json, Format::Csv];

    fn run(&self, format: Format) -> Result<String> {
        let markets = self.markets()?;
        match format {
            Format::Csv => {
                let rows: Vec<TerminalRow> = markets
                    .iter()
                    .map(|m| TerminalRow {
                        scenario_id: m.scenario.index(),
                        prob: m.scenario.probability(),
                        s_t: m.terminal_price(),
                        x1_t: m.x1.terminal(),
                        x2_t: m.x2.terminal(),
                    })
                    .collect();
                output::csv(&rows)
            }
            Format::Json if self.xi.is_some() => output::json(MarketRecord::from(&markets[0])),
            Format::Json => output::json(MarketSet {
                n: markets[0].n(),
                horizon: self.horizon,
                markets: markets.iter().map(MarketRecord::from).collect(),
            }),
        }
    }
}
