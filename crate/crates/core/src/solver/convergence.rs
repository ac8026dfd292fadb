//! Values `u_n(x)` along a sequence of trading frequencies.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{dp_value, ext_real, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::market::PriceTree;
use crate::utility::UtilitySpec;

/// Largest `n` accepted by [`convergence_table`].
pub const MAX_CONVERGENCE_N: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub kappa: f64,
    pub x: f64,
    #[serde(with = "ext_real")]
    pub value: f64,
    /// `|u_n - u_{n_prev}|`, absent on the first row.
    pub diff_prev: Option<f64>,
    pub runtime_ms: u64,
    pub states_visited: u64,
    pub warnings: Vec<String>,
}

/// Runs [`dp_value`] for each `n` with the same physical grids.
pub fn convergence_table(
    n_list: &[usize],
    horizon: f64,
    u: &UtilitySpec,
    x: f64,
    kappa: f64,
    config: &SolverConfig,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() {
        return Err(invalid("empty list of trading frequencies"));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n > MAX_CONVERGENCE_N) {
        return Err(Error::ResourceLimit(format!(
            "n = {n} exceeds the convergence limit {MAX_CONVERGENCE_N}"
        )));
    }
    let config = SolverConfig {
        extract_policy: false,
        ..config.clone()
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let tree = PriceTree::capped(n, horizon)?;
        let started = Instant::now();
        let report = dp_value(&tree, u, x, kappa, &config)?;
        let runtime_ms = started.elapsed().as_millis() as u64;
        let diff_prev = rows.last().map(|r| (report.value - r.value).abs());
        rows.push(ConvergenceRow {
            n,
            kappa,
            x,
            value: report.value,
            diff_prev,
            runtime_ms,
            states_visited: report.states_visited,
            warnings: report.warnings,
        });
    }
    Ok(rows)
}

/// Whether the last `count` successive differences are strictly decreasing.
pub fn differences_decreasing(rows: &[ConvergenceRow], count: usize) -> bool {
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.diff_prev).collect();
    if diffs.len() < count || count == 0 {
        return false;
    }
    diffs[diffs.len() - count..].windows(2).all(|w| w[1] < w[0])
}
