//! Expected-utility maximization over grid strategies.
//!
//! `u_n(x) = sup E[U(x + V_T, S_T)]` over admissible strategies whose holdings
//! lie on a symmetric grid `{-Γ, …, -δ, 0, δ, …, Γ}`. Two solvers are
//! provided: an exhaustive enumeration with exact costs for very small trees
//! and a dynamic program over (node, holding, accumulated cost) in which the
//! accumulated cost is rounded up to a grid of step `c`.

mod arbitrage;
mod brute;
mod convergence;
mod dp;
mod replication;

pub use arbitrage::{lookahead_arbitrage, lookahead_profit_mc, ArbitrageOutcome, ArbitrageSample};
pub use brute::brute_force_value;
pub use convergence::{convergence_table, differences_decreasing, ConvergenceRow};
pub use dp::{dp_value, estimate_dp_work};
pub use replication::{frictionless_replication_price, Replication};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::PriceTree;
use crate::utility::UtilitySpec;
use crate::wealth::{is_admissible, wealth_process, Strategy};

/// Default step of the holding grid, in shares.
pub const DEFAULT_HOLDING_STEP: f64 = 0.025;
/// Default step of the cost grid, in currency.
pub const DEFAULT_COST_STEP: f64 = 0.002;
/// Largest `n` for which the dynamic program stores its policy by default.
pub const DEFAULT_POLICY_MAX_N: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// `δ`.
    pub holding_step: f64,
    /// `Γ`; defaults to `x / (2κ S_0)`, the largest position that survives
    /// the entry charge. Zero restricts the grid to `{0}`.
    pub holding_bound: Option<f64>,
    /// `c`.
    pub cost_step: f64,
    /// Optional cap `C_max` on accumulated cost; must be at least `x`.
    pub cost_cap: Option<f64>,
    /// Largest `n` accepted by the brute-force solver.
    pub enumeration_cap: usize,
    /// Largest number of holding assignments the brute-force solver visits.
    pub max_assignments: u64,
    /// Largest number of transition evaluations the dynamic program performs.
    pub max_work: u64,
    /// Extract the optimal policy when `n ≤ policy_max_n`.
    pub extract_policy: bool,
    pub policy_max_n: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            holding_step: DEFAULT_HOLDING_STEP,
            holding_bound: None,
            cost_step: DEFAULT_COST_STEP,
            cost_cap: None,
            enumeration_cap: 3,
            max_assignments: 50_000_000,
            max_work: 200_000_000_000,
            extract_policy: true,
            policy_max_n: DEFAULT_POLICY_MAX_N,
        }
    }
}

/// Resolved symmetric holding grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HoldingGrid {
    pub step: f64,
    /// Number of positive grid points `H`; the grid has `2H + 1` points.
    pub half: usize,
}

impl HoldingGrid {
    pub fn count(&self) -> usize {
        2 * self.half + 1
    }

    pub fn value(&self, index: usize) -> f64 {
        (index as f64 - self.half as f64) * self.step
    }

    pub fn bound(&self) -> f64 {
        self.half as f64 * self.step
    }

    /// Indices ordered by `|h|`, then `h`: `0, -δ, +δ, -2δ, …`.
    pub fn tie_order(&self) -> Vec<usize> {
        let h = self.half;
        let mut out = vec![h];
        for d in 1..=h {
            out.push(h - d);
            out.push(h + d);
        }
        out
    }
}

pub(crate) fn check_problem(x: f64, kappa: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(format!("capital must be positive, got {x}")));
    }
    if !(0.0..1.0).contains(&kappa) {
        return Err(invalid(format!("cost rate must lie in [0, 1), got {kappa}")));
    }
    Ok(())
}

pub(crate) fn resolve_holdings(
    config: &SolverConfig,
    tree: &PriceTree,
    x: f64,
    kappa: f64,
) -> Result<HoldingGrid> {
    let step = config.holding_step;
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid(format!("holding step must be positive, got {step}")));
    }
    let bound = match config.holding_bound {
        Some(b) if b.is_finite() && b >= 0.0 => {
            if b > 0.0 && b < step {
                return Err(invalid(format!(
                    "holding bound {b} is smaller than the holding step {step}"
                )));
            }
            b
        }
        Some(b) => return Err(invalid(format!("holding bound must be nonnegative, got {b}"))),
        None if kappa > 0.0 => (x / (2.0 * kappa * tree.price(0, 0))).max(step),
        None => return Err(invalid("a holding bound is required when κ = 0")),
    };
    let half = (bound / step * (1.0 + 1e-12)).floor() as usize;
    if half > 20_000 {
        return Err(Error::ResourceLimit(format!(
            "holding grid with {} points is too large",
            2 * half + 1
        )));
    }
    Ok(HoldingGrid { step, half })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Brute,
    Dp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub holding_step: f64,
    pub holding_bound: f64,
    pub holding_points: usize,
    /// `None` for the brute-force solver, which accumulates exact costs.
    pub cost_step: Option<f64>,
    pub cost_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPolicy {
    pub scenario: usize,
    pub holdings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub n: usize,
    pub x: f64,
    pub kappa: f64,
    pub utility: UtilitySpec,
    pub solver: SolverKind,
    /// Solver value. For the dynamic program this is a lower bound on the
    /// optimum over the holding grid.
    #[serde(with = "ext_real")]
    pub value: f64,
    /// Exact expected utility of the extracted policy.
    #[serde(with = "ext_real_opt")]
    pub policy_value: Option<f64>,
    /// Expected utility of never trading.
    #[serde(with = "ext_real")]
    pub no_trade_value: f64,
    pub lower_bound: bool,
    pub grid: GridInfo,
    pub states_visited: u64,
    /// `E[Σ S_k |Δγ_k|]` of the policy.
    pub policy_volume: Option<f64>,
    pub policy: Option<Vec<ScenarioPolicy>>,
    pub warnings: Vec<String>,
}

/// Expected utility of holding nothing.
pub fn no_trade_value(tree: &PriceTree, u: &UtilitySpec, x: f64) -> f64 {
    let p = tree.scenario_probability();
    tree.terminal_prices()
        .iter()
        .map(|&s| p * u.eval_unchecked(x, s))
        .sum()
}

/// Exact expected utility and traded volume of per-scenario holdings, which
/// must be admissible for `x`.
pub(crate) fn evaluate_policy(
    tree: &PriceTree,
    u: &UtilitySpec,
    x: f64,
    kappa: f64,
    policy: &[ScenarioPolicy],
) -> Result<(f64, f64)> {
    let p = tree.scenario_probability();
    let mut value = 0.0;
    let mut volume = 0.0;
    for sp in policy {
        let prices = tree.scenario_prices(sp.scenario);
        let strategy = Strategy::new(*tree.grid(), sp.holdings.clone())?;
        let trace = wealth_process(&prices, &strategy, kappa)?;
        if !is_admissible(x, &trace) {
            return Err(Error::Inadmissible { capital: x });
        }
        let v = (x + trace.terminal_wealth).max(0.0);
        value += p * u.eval_unchecked(v, prices[tree.n()]);
        volume += p * strategy.traded_volume(&prices);
    }
    Ok((value, volume))
}

/// Serializes `-∞` as the string `"-inf"`.
pub mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("expected a number or \"-inf\", got {s}"))),
        }
    }
}

pub mod ext_real_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::ext_real")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
