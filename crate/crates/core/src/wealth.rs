//! Grid strategies and the wealth functional under proportional costs.
//!
//! With holdings `γ_0..γ_n` traded at prices `S_0..S_n` (and `γ_{-1} = 0`):
//!
//! ```text
//! V_k = γ_k S_k - Σ_{j≤k} S_j Δγ_j - κ |γ_k| S_k - κ Σ_{j≤k} S_j |Δγ_j|
//! ```
//!
//! i.e. the position is marked at the bid for longs and at the ask for shorts.
//! Between trading dates holdings are constant and the price is linear in
//! time, so `V` is affine on each cell and admissibility only needs checking
//! at the grid points.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::{jordan_decompose, total_variation, StepPath, TimeGrid};

/// Relative slack allowed when checking `x + V_k ≥ 0`.
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-12;

/// Holdings at the trading dates; the last entry (liquidation) is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    grid: TimeGrid,
    holdings: Vec<f64>,
}

impl Strategy {
    pub fn new(grid: TimeGrid, holdings: Vec<f64>) -> Result<Self> {
        if holdings.len() != grid.steps() + 1 {
            return Err(Error::LengthMismatch {
                expected: grid.steps() + 1,
                actual: holdings.len(),
            });
        }
        if let Some(k) = holdings.iter().position(|h| !h.is_finite()) {
            return Err(invalid(format!("holding at index {k} is not finite")));
        }
        if holdings[grid.steps()] != 0.0 {
            return Err(invalid("the final holding must be zero (liquidation)"));
        }
        Ok(Self { grid, holdings })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            holdings: vec![0.0; grid.steps() + 1],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn holdings(&self) -> &[f64] {
        &self.holdings
    }

    pub fn as_step_path(&self) -> StepPath {
        StepPath::new(self.grid, self.holdings.clone()).expect("strategy holdings are finite")
    }

    /// `Σ_k |Δγ_k|`, including the initial purchase.
    pub fn total_variation(&self) -> f64 {
        total_variation(&self.holdings)
    }

    /// Traded value `Σ_k S_k |Δγ_k|`.
    pub fn traded_volume(&self, prices: &[f64]) -> f64 {
        let mut prev = 0.0;
        self.holdings
            .iter()
            .zip(prices)
            .map(|(&h, &s)| {
                let d = (h - prev).abs();
                prev = h;
                s * d
            })
            .sum()
    }
}

/// Wealth `V_k` at every trading date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthTrace {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub terminal_wealth: f64,
}

fn check_prices(grid: &TimeGrid, prices: &[f64]) -> Result<()> {
    if prices.len() != grid.steps() + 1 {
        return Err(Error::IncompatibleGrids(format!(
            "{} prices for a grid with {} steps",
            prices.len(),
            grid.steps()
        )));
    }
    if let Some(index) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::NonPositivePrice {
            index,
            price: prices[index],
        });
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(invalid(format!("cost rate must lie in [0, 1), got {kappa}")));
    }
    Ok(())
}

pub fn wealth_process(prices: &[f64], strategy: &Strategy, kappa: f64) -> Result<WealthTrace> {
    check_prices(&strategy.grid, prices)?;
    check_kappa(kappa)?;
    let mut values = Vec::with_capacity(prices.len());
    let (mut paid, mut prev) = (0.0, 0.0);
    for (&h, &s) in strategy.holdings.iter().zip(prices) {
        let d = h - prev;
        paid += s * d + kappa * s * d.abs();
        values.push(h * s - kappa * h.abs() * s - paid);
        prev = h;
    }
    let terminal_wealth = *values.last().unwrap();
    Ok(WealthTrace {
        grid: strategy.grid,
        values,
        terminal_wealth,
    })
}

pub fn is_admissible(x: f64, trace: &WealthTrace) -> bool {
    trace
        .values
        .iter()
        .all(|&v| x + v >= -ADMISSIBILITY_TOLERANCE * (x.abs() + v.abs()))
}

pub fn scale_strategy(lambda: f64, strategy: &Strategy) -> Result<Strategy> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("scale must be positive, got {lambda}")));
    }
    Ok(Strategy {
        grid: strategy.grid,
        holdings: strategy.holdings.iter().map(|h| lambda * h).collect(),
    })
}

/// Samples a fine strategy at the coarse dates with a one-period lag:
/// `γ̄_k = γ((k-1)T/n)` for `1 ≤ k ≤ n-1`, `γ̄_0 = γ̄_n = 0`.
pub fn discretize_strategy(fine: &Strategy, coarse_n: usize) -> Result<Strategy> {
    let m = fine.grid.steps();
    if coarse_n == 0 || (!m.is_multiple_of(coarse_n) && !coarse_n.is_multiple_of(m)) {
        return Err(Error::IncompatibleGrids(format!(
            "coarse grid {coarse_n} is not nested with fine grid {m}"
        )));
    }
    let grid = TimeGrid::new(coarse_n, fine.grid.horizon())?;
    let mut holdings = vec![0.0; coarse_n + 1];
    for (k, slot) in holdings.iter_mut().enumerate().take(coarse_n).skip(1) {
        // Fine cell of time (k-1)T/n, computed in integers.
        let cell = ((k - 1) * m) / coarse_n;
        *slot = fine.holdings[cell.min(m)];
    }
    Ok(Strategy { grid, holdings })
}

/// Zeroes the strategy from the first date at which `x + V` would fall below
/// `floor`, either after trading or before trading at that date.
///
/// The truncated strategy keeps `x + V_k ≥ floor` before the stopping date and
/// afterwards holds the liquidation value at the stopping date, so its minimum
/// over the grid is never below `min(floor, min_k(x + V_k))`.
pub fn truncate_at_ruin(
    x: f64,
    strategy: &Strategy,
    prices: &[f64],
    kappa: f64,
    floor: f64,
) -> Result<Strategy> {
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(format!("capital must be positive, got {x}")));
    }
    let trace = wealth_process(prices, strategy, kappa)?;
    let h = &strategy.holdings;
    let mut stop = None;
    for k in 0..h.len() {
        let before = if k == 0 {
            x
        } else {
            // Liquidation value at date k with the holding carried from k-1.
            let carried = h[k - 1];
            let paid_before = carried * prices[k - 1] - kappa * carried.abs() * prices[k - 1]
                - trace.values[k - 1];
            x + carried * prices[k] - kappa * carried.abs() * prices[k] - paid_before
        };
        if before < floor || x + trace.values[k] < floor {
            stop = Some(k);
            break;
        }
    }
    let mut holdings = h.clone();
    if let Some(k) = stop {
        holdings[k..].fill(0.0);
    }
    Ok(Strategy {
        grid: strategy.grid,
        holdings,
    })
}

/// Splits the holdings into cumulative purchases and sales.
pub fn trading_volumes(strategy: &Strategy) -> (StepPath, StepPath) {
    let j = jordan_decompose(&strategy.as_step_path());
    (j.positive, j.negative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use proptest::strategy::Strategy as _;

    fn strat(h: &[f64]) -> Strategy {
        Strategy::new(TimeGrid::new(h.len() - 1, 1.0).unwrap(), h.to_vec()).unwrap()
    }

    #[test]
    fn strategy_validation() {
        let g = TimeGrid::new(2, 1.0).unwrap();
        assert!(Strategy::new(g, vec![1.0, 1.0, 0.5]).is_err());
        assert!(Strategy::new(g, vec![1.0, 0.0]).is_err());
        assert!(Strategy::new(g, vec![f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_strategy_has_zero_wealth() {
        let w = wealth_process(&[1.0, 2.0, 0.5], &strat(&[0.0, 0.0, 0.0]), 0.3).unwrap();
        assert!(w.values.iter().all(|&v| v == 0.0));
        assert!(is_admissible(1e-9, &w));
    }

    #[test]
    fn buy_and_hold_pin() {
        let w = wealth_process(&[100.0, 110.0], &strat(&[1.0, 0.0]), 0.01).unwrap();
        assert_abs_diff_eq!(w.terminal_wealth, 7.9, epsilon = 1e-12);
        let w2 = wealth_process(&[100.0, 110.0], &scale_strategy(2.0, &strat(&[1.0, 0.0])).unwrap(), 0.01)
            .unwrap();
        assert_abs_diff_eq!(w2.terminal_wealth, 15.8, epsilon = 1e-12);
    }

    #[test]
    fn two_period_market_pin() {
        // Prices of the n = 2 market along ξ = (+1, -1).
        let a = 0.5f64.sqrt();
        let cap = 2f64.ln();
        let s = [1.0, 1.0 + cap * a, (1.0 + cap * a) * (1.0 - cap * a)];
        let w = wealth_process(&s, &strat(&[1.0, 1.0, 0.0]), 0.01).unwrap();
        let oracle = -(1.0 - s[2]) - 0.01 * (1.0 + s[2]);
        assert_abs_diff_eq!(w.terminal_wealth, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(w.terminal_wealth, -0.25777, epsilon = 1e-4);
    }

    #[test]
    fn initial_double_charge() {
        // V_0 = -2κ h S_0.
        for h in [0.1, 0.5, 0.6, 1.0] {
            let w = wealth_process(&[1.0, 1.3], &strat(&[h, 0.0]), 0.1).unwrap();
            assert_abs_diff_eq!(w.values[0], -0.2 * h, epsilon = 1e-15);
            let x = 0.1;
            let ok_at_zero = x + w.values[0] >= -1e-15;
            assert_eq!(ok_at_zero, h <= 0.5);
        }
        let w = wealth_process(&[1.0, 1.0], &strat(&[1.0, 0.0]), 0.1).unwrap();
        assert!(!is_admissible(0.19, &w));
        assert!(is_admissible(0.2, &w));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            wealth_process(&[1.0, -1.0], &strat(&[1.0, 0.0]), 0.1),
            Err(Error::NonPositivePrice { index: 1, .. })
        ));
        assert!(matches!(
            wealth_process(&[1.0], &strat(&[1.0, 0.0]), 0.1),
            Err(Error::IncompatibleGrids(_))
        ));
        assert!(scale_strategy(0.0, &strat(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn discretization_examples() {
        let z = discretize_strategy(&strat(&[0.0; 5]), 4).unwrap();
        assert!(z.holdings().iter().all(|&h| h == 0.0));

        let c = 0.7;
        let fine = strat(&[0.0, c, c, c, c, c, 0.0]);
        let coarse = discretize_strategy(&fine, 6).unwrap();
        assert_eq!(coarse.holdings(), &[0.0, 0.0, c, c, c, c, 0.0]);
        let coarser = discretize_strategy(&fine, 3).unwrap();
        assert_eq!(coarser.holdings(), &[0.0, 0.0, c, 0.0]);

        assert!(discretize_strategy(&fine, 4).is_err());
    }

    #[test]
    fn truncation_examples() {
        let s = strat(&[0.2, 0.1, 0.0]);
        let p = [1.0, 1.1, 1.2];
        assert_eq!(truncate_at_ruin(1.0, &s, &p, 0.01, 0.0).unwrap(), s);

        let ruined = truncate_at_ruin(0.1, &strat(&[1.0, 0.0]), &[1.0, 1.0], 0.1, 0.0).unwrap();
        assert_eq!(ruined.holdings(), &[0.0, 0.0]);
    }

    #[test]
    fn truncation_stops_on_market_loss() {
        // Long 1 share bought for 0.1 + costs; price falls to 0.5 so the
        // carried position is worth less than the floor at date 1.
        let s = strat(&[1.0, 1.0, 0.0]);
        let p = [1.0, 0.5, 0.4];
        let t = truncate_at_ruin(0.3, &s, &p, 0.0, 0.0).unwrap();
        assert_eq!(t.holdings(), &[1.0, 0.0, 0.0]);
    }

    fn instance() -> impl proptest::strategy::Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (1usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(0.2..3.0f64, n + 1),
                prop::collection::vec(-2.0..2.0f64, n),
                0.0..0.3f64,
            )
                .prop_map(|(p, mut h, k)| {
                    h.push(0.0);
                    (p, h, k)
                })
        })
    }

    proptest! {
        #[test]
        fn homogeneity((p, h, k) in instance(), lambda in 0.01..10.0f64) {
            let s = strat(&h);
            let w = wealth_process(&p, &s, k).unwrap();
            let ws = wealth_process(&p, &scale_strategy(lambda, &s).unwrap(), k).unwrap();
            for (a, b) in w.values.iter().zip(&ws.values) {
                prop_assert!((lambda * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn cost_monotonicity((p, h, k) in instance(), extra in 0.0..0.3f64) {
            let s = strat(&h);
            let lo = wealth_process(&p, &s, k).unwrap().terminal_wealth;
            let hi = wealth_process(&p, &s, (k + extra).min(0.99)).unwrap().terminal_wealth;
            prop_assert!(hi <= lo + 1e-12);
        }

        #[test]
        fn frictionless_telescoping((p, h, _k) in instance()) {
            let w = wealth_process(&p, &strat(&h), 0.0).unwrap();
            let gains: f64 = (0..h.len() - 1).map(|k| h[k] * (p[k + 1] - p[k])).sum();
            prop_assert!((w.terminal_wealth - gains).abs() <= 1e-12 * (1.0 + gains.abs()));
        }

        #[test]
        fn liquidation_value_is_continuous((p, h, k) in instance()) {
            // The last value equals the carried position marked at bid/ask.
            let w = wealth_process(&p, &strat(&h), k).unwrap();
            let n = h.len() - 1;
            let carried = h[n - 1];
            let paid_before = carried * p[n - 1] - k * carried.abs() * p[n - 1] - w.values[n - 1];
            let left = carried * p[n] - k * carried.abs() * p[n] - paid_before;
            prop_assert!((left - w.terminal_wealth).abs() <= 1e-12 * (1.0 + left.abs()));
        }

        #[test]
        fn truncation_floor((p, h, k) in instance(), x in 0.01..2.0f64, floor in 0.0..0.05f64) {
            let s = strat(&h);
            let t = truncate_at_ruin(x, &s, &p, k, floor).unwrap();
            let before = wealth_process(&p, &s, k).unwrap();
            let after = wealth_process(&p, &t, k).unwrap();
            let min_before = before.values.iter().fold(f64::INFINITY, |m, &v| m.min(x + v));
            let min_after = after.values.iter().fold(f64::INFINITY, |m, &v| m.min(x + v));
            prop_assert!(min_after >= floor.min(min_before) - 1e-12);
        }

        #[test]
        fn discretization_does_not_add_variation(mut h in prop::collection::vec(-2.0..2.0f64, 12)) {
            h.push(0.0);
            let fine = strat(&h);
            for n in [1usize, 2, 3, 4, 6, 12] {
                let c = discretize_strategy(&fine, n).unwrap();
                prop_assert!(c.total_variation() <= fine.total_variation() + 1e-12);
            }
        }
    }
}
