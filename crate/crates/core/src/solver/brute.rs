//! Exhaustive search over adapted grid strategies with exact costs.

use super::{
    check_problem, no_trade_value, resolve_holdings, GridInfo, ScenarioPolicy, SolverConfig,
    SolverKind, ValueReport,
};
use crate::error::{Error, Result};
use crate::market::PriceTree;
use crate::utility::UtilitySpec;
use crate::wealth::ADMISSIBILITY_TOLERANCE;

/// Enumerates one grid holding per internal tree node (levels `0..n-1`, the
/// terminal holding being zero) and keeps the admissible assignment with the
/// largest expected utility. Ties keep the first assignment in odometer order.
pub fn brute_force_value(
    tree: &PriceTree,
    u: &UtilitySpec,
    x: f64,
    kappa: f64,
    config: &SolverConfig,
) -> Result<ValueReport> {
    check_problem(x, kappa)?;
    let n = tree.n();
    if n > config.enumeration_cap {
        return Err(Error::ResourceLimit(format!(
            "brute force for n = {n} exceeds the cap {}",
            config.enumeration_cap
        )));
    }
    let hold = resolve_holdings(config, tree, x, kappa)?;
    let slots = (1usize << n) - 1;
    let choices = hold.count() as u64;
    let total = (0..slots).try_fold(1u64, |acc, _| acc.checked_mul(choices));
    match total {
        Some(t) if t <= config.max_assignments => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "{choices}^{slots} assignments exceed the limit {}",
                config.max_assignments
            )))
        }
    }
    let values: Vec<f64> = (0..hold.count()).map(|i| hold.value(i)).collect();
    let scenarios = tree.scenario_count();
    let paths: Vec<Vec<f64>> = (0..scenarios).map(|id| tree.scenario_prices(id)).collect();
    // Flat index of the node at level k on path `id`.
    let slot_of = |id: usize, k: usize| (1usize << k) - 1 + tree.node_of(id, k);
    let p = tree.scenario_probability();
    let terminal = tree.terminal_prices();

    // Start from the all-zero assignment so that ties favour not trading.
    let mut digits = vec![hold.half; slots];
    let mut best_value = f64::NEG_INFINITY;
    let mut best = digits.clone();
    let mut states = 0u64;
    let order = hold.tie_order();
    let mut pos = vec![0usize; slots];
    loop {
        states += 1;
        let mut expected = 0.0;
        let mut feasible = true;
        'scen: for (id, path) in paths.iter().enumerate() {
            let (mut paid, mut prev) = (0.0, 0.0);
            for k in 0..=n {
                let h = if k < n { values[digits[slot_of(id, k)]] } else { 0.0 };
                let s = path[k];
                let d = h - prev;
                paid += s * d + kappa * s * d.abs();
                let v = h * s - kappa * h.abs() * s - paid;
                if x + v < -ADMISSIBILITY_TOLERANCE * (x.abs() + v.abs()) {
                    feasible = false;
                    break 'scen;
                }
                prev = h;
            }
            expected += p * u.eval_unchecked((x - paid).max(0.0), terminal[id]);
        }
        if feasible && expected > best_value {
            best_value = expected;
            best.clone_from(&digits);
        }
        // Odometer over the tie order, last slot fastest.
        let mut done = true;
        for s in (0..slots).rev() {
            pos[s] += 1;
            if pos[s] < order.len() {
                digits[s] = order[pos[s]];
                done = false;
                break;
            }
            pos[s] = 0;
            digits[s] = order[0];
        }
        if done {
            break;
        }
    }
    let policy: Vec<ScenarioPolicy> = (0..scenarios)
        .map(|id| ScenarioPolicy {
            scenario: id,
            holdings: (0..=n)
                .map(|k| if k < n { values[best[slot_of(id, k)]] } else { 0.0 })
                .collect(),
        })
        .collect();
    let (policy_value, volume) = super::evaluate_policy(tree, u, x, kappa, &policy)?;
    Ok(ValueReport {
        n,
        x,
        kappa,
        utility: *u,
        solver: SolverKind::Brute,
        value: best_value,
        policy_value: Some(policy_value),
        no_trade_value: no_trade_value(tree, u, x),
        lower_bound: false,
        grid: GridInfo {
            holding_step: hold.step,
            holding_bound: hold.bound(),
            holding_points: hold.count(),
            cost_step: None,
            cost_cap: None,
        },
        states_visited: states,
        policy_volume: Some(volume),
        policy: Some(policy),
        warnings: Vec::new(),
    })
}
