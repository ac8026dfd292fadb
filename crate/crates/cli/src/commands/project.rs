use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tclab::diagnostics::{
    expected_utility, is_adapted, noise_coin_tree, peeking_strategies, project_strategy,
    CoarsePartition,
};
use tclab::market::PriceTree;
use tclab::utility::UtilitySpec;
use tclab::wealth::Strategy;

use super::{require_seed, Command, CommonArgs};
use crate::config::Format;
use crate::output;

/// Project strategies that peek at an independent coin onto the price filtration.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, visible_alias = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub utility: Option<UtilitySpec>,
    /// Scale of the random holdings.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectConfig {
    pub n: usize,
    pub horizon: f64,
    pub kappa: f64,
    pub x: f64,
    pub utility: UtilitySpec,
    pub amplitude: f64,
    pub seed: Option<u64>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            n: 4,
            horizon: 1.0,
            kappa: 0.05,
            x: 0.1,
            utility: UtilitySpec::Shortfall { strike: 1.0 },
            amplitude: 0.5,
            seed: None,
        }
    }
}

#[derive(Serialize)]
struct Comparison {
    fine_value: f64,
    projected_value: f64,
    projected_admissible: bool,
    coarse_adapted: bool,
    jensen_holds: bool,
}

#[derive(Serialize)]
struct ProjectDoc {
    n: usize,
    kappa: f64,
    x: f64,
    utility: UtilitySpec,
    amplitude: f64,
    seed: u64,
    /// Seeded random peeking strategies.
    random: Comparison,
    /// Holding `amplitude · ξ_1` over the first period only.
    first_sign: Comparison,
}

#[derive(Serialize)]
struct ProjectRow {
    case: &'static str,
    n: usize,
    fine_value: f64,
    projected_value: f64,
    projected_admissible: bool,
    coarse_adapted: bool,
    jensen_holds: bool,
}

impl ProjectConfig {
    fn compare(&self, tree: &PriceTree, fine: &[Strategy]) -> Result<Comparison> {
        let coarse = CoarsePartition::without_first_sign(self.n);
        let fine_value = expected_utility(tree, fine, &self.utility, self.x, self.kappa)?;
        let projected = project_strategy(tree, fine, &coarse)?;
        let coarse_adapted = is_adapted(&projected, &coarse);
        let (projected_value, projected_admissible) =
            match expected_utility(tree, &projected, &self.utility, self.x, self.kappa) {
                Ok(v) => (v, true),
                Err(tclab::Error::Inadmissible { .. }) => (f64::NAN, false),
                Err(e) => return Err(e.into()),
            };
        Ok(Comparison {
            fine_value,
            projected_value,
            projected_admissible,
            coarse_adapted,
            jensen_holds: projected_value >= fine_value - 1e-12,
        })
    }
}

impl Command for ProjectConfig {
    const NAME: &'static str = "project";
    const FORMATS: &'static [Format] = &[Format::Json, Format::Csv];

    fn run(&self, format: Format) -> Result<String> {
        let seed = require_seed(self.seed, Self::NAME)?;
        if self.n > 16 {
            bail!("project enumerates the tree and needs n <= 16, got {}", self.n);
        }
        let tree = noise_coin_tree(self.n, self.horizon)?;
        let random = self.compare(
            &tree,
            &peeking_strategies(&tree, self.x, self.kappa, self.amplitude, seed)?,
        )?;
        let first: Vec<Strategy> = (0..tree.scenario_count())
            .map(|id| {
                let sign = if (id >> (self.n - 1)) & 1 == 1 { 1.0 } else { -1.0 };
                let mut h = vec![0.0; self.n + 1];
                h[0] = self.amplitude * sign;
                Strategy::new(*tree.grid(), h)
            })
            .collect::<tclab::Result<_>>()?;
        let first_sign = self.compare(&tree, &first)?;
        match format {
            Format::Json => output::json(ProjectDoc {
                n: self.n,
                kappa: self.kappa,
                x: self.x,
                utility: self.utility,
                amplitude: self.amplitude,
                seed,
                random,
                first_sign,
            }),
            Format::Csv => {
                let row = |case, c: Comparison| ProjectRow {
                    case,
                    n: self.n,
                    fine_value: c.fine_value,
                    projected_value: c.projected_value,
                    projected_admissible: c.projected_admissible,
                    coarse_adapted: c.coarse_adapted,
                    jensen_holds: c.jensen_holds,
                };
                output::csv(&[row("random", random), row("first_sign", first_sign)])
            }
        }
    }
}
