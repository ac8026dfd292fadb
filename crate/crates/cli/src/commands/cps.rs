use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::cps::{margin_profile, tv_bound_check};
use tclab::market::PriceTree;
use tclab::solver::dp_value;
use tclab::utility::UtilitySpec;
use tclab::wealth::Strategy;

use super::{require_seed, Command, CommonArgs, GridArgs, GridConfig};
use crate::config::Format;
use crate::output;

/// Shadow-price margins and the traded-volume bound of optimal policies.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckCpsArgs {
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
    /// Margin ε of the strictly consistent price system; defaults to κ/2.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub utility: Option<UtilitySpec>,
    /// Scenarios sampled per n for the margin statistics.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest n for which the optimal policy is solved and its volume reported.
    #[arg(long)]
    pub tv_max_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckCpsConfig {
    pub n_list: Vec<usize>,
    pub horizon: f64,
    pub kappa: f64,
    pub eps: Option<f64>,
    pub x: f64,
    pub utility: UtilitySpec,
    pub samples: usize,
    pub seed: Option<u64>,
    pub tv_max_n: usize,
    #[serde(flatten)]
    pub grid: GridConfig,
}

impl Default for CheckCpsConfig {
    fn default() -> Self {
        Self {
            n_list: vec![4, 16, 64, 256, 1024, 4096],
            horizon: 1.0,
            kappa: 0.1,
            eps: None,
            x: 0.1,
            utility: UtilitySpec::Shortfall { strike: 1.0 },
            samples: 1000,
            seed: None,
            tv_max_n: 6,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CpsRow {
    pub n: usize,
    /// Supremum of the margin over all scenarios.
    pub margin: f64,
    pub kappa: f64,
    pub margin_ok: bool,
    /// Expected traded volume of the optimal policy.
    pub tv_bound: Option<f64>,
    pub x_over_eps: f64,
    pub margin_sample_mean: f64,
    pub margin_sample_max: f64,
    pub samples: usize,
}

#[derive(Serialize)]
struct CpsDoc {
    rows: Vec<CpsRow>,
}

impl CheckCpsConfig {
    fn policy_volume(&self, n: usize, eps: f64) -> Result<f64> {
        let tree = PriceTree::capped(n, self.horizon)?;
        let mut cfg = self.grid.solver_config();
        cfg.policy_max_n = cfg.policy_max_n.max(n);
        let report = dp_value(&tree, &self.utility, self.x, self.kappa, &cfg)?;
        let policy = report.policy.unwrap_or_default();
        let mut strategies = Vec::with_capacity(policy.len());
        let mut prices = Vec::with_capacity(policy.len());
        for sp in &policy {
            strategies.push(Strategy::new(*tree.grid(), sp.holdings.clone())?);
            prices.push(tree.scenario_prices(sp.scenario));
        }
        let weights = vec![tree.scenario_probability(); policy.len()];
        let check = tv_bound_check(&strategies, &prices, &prices, &weights, self.x, self.kappa, eps)?;
        Ok(check.expected_volume)
    }

    pub fn rows(&self) -> Result<Vec<CpsRow>> {
        let seed = require_seed(self.seed, Self::NAME)?;
        let eps = self.eps.unwrap_or(self.kappa / 2.0);
        self.n_list
            .iter()
            .map(|&n| {
                let profile = margin_profile(n, self.horizon, self.samples, seed)?;
                let tv_bound = if n <= self.tv_max_n {
                    Some(self.policy_volume(n, eps)?)
                } else {
                    None
                };
                Ok(CpsRow {
                    n,
                    margin: profile.worst,
                    kappa: self.kappa,
                    margin_ok: profile.worst <= self.kappa - eps,
                    tv_bound,
                    x_over_eps: self.x / eps,
                    margin_sample_mean: profile.sample_mean,
                    margin_sample_max: profile.sample_max,
                    samples: profile.samples,
                })
            })
            .collect()
    }
}

impl Command for CheckCpsConfig {
    const NAME: &'static str = "check-cps";
    const FORMATS: &'static [Format] = &[Format::Csv, Format::Json];

    fn run(&self, format: Format) -> Result<String> {
        let rows = self.rows()?;
        match format {
            Format::Csv => output::csv(&rows),
            Format::Json => output::json(CpsDoc { rows }),
        }
    }
}
