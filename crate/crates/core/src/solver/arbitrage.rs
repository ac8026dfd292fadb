//! Lookahead arbitrage against the interpolated price.
//!
//! The interpolated price moves linearly from `S̃_{k-1}` to `S̃_k` over a
//! period whose endpoint is already known at its start. Holding
//! `sign(S̃_k - S̃_{k-1})` shares over the period and flattening at its end
//! gains `|S̃_k - S̃_{k-1}|` before costs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::market::{build_market, sample_scenarios, DiscreteMarket};
use crate::paths::TimeGrid;
use crate::wealth::{wealth_process, Strategy, WealthTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageOutcome {
    /// Holdings on the doubled grid: open at even indices, flat at odd ones.
    pub strategy: Strategy,
    /// Prices on the doubled grid, `(S̃_0, S̃_1, S̃_1, S̃_2, …, S̃_n, S̃_n)`.
    pub prices: Vec<f64>,
    pub trace: WealthTrace,
}

impl ArbitrageOutcome {
    pub fn terminal_wealth(&self) -> f64 {
        self.trace.terminal_wealth
    }
}

pub fn lookahead_arbitrage(market: &DiscreteMarket, kappa: f64) -> Result<ArbitrageOutcome> {
    let n = market.n();
    let s = &market.s_tilde;
    let grid = TimeGrid::new(2 * n, market.grid.horizon())?;
    let mut prices = Vec::with_capacity(2 * n + 1);
    let mut holdings = Vec::with_capacity(2 * n + 1);
    for k in 1..=n {
        prices.push(s[k - 1]);
        prices.push(s[k]);
        let d = s[k] - s[k - 1];
        holdings.push(if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        });
        holdings.push(0.0);
    }
    prices.push(s[n]);
    holdings.push(0.0);
    let strategy = Strategy::new(grid, holdings)?;
    let trace = wealth_process(&prices, &strategy, kappa)?;
    Ok(ArbitrageOutcome {
        strategy,
        prices,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageSample {
    pub n: usize,
    pub kappa: f64,
    pub samples: usize,
    pub seed: u64,
    pub mean: f64,
    pub std_err: f64,
    pub positive_fraction: f64,
}

/// Monte Carlo mean of the lookahead profit over sampled scenarios.
pub fn lookahead_profit_mc(
    n: usize,
    horizon: f64,
    kappa: f64,
    samples: usize,
    seed: u64,
) -> Result<ArbitrageSample> {
    if samples < 2 {
        return Err(invalid("at least two samples are needed"));
    }
    let profits = sample_scenarios(n, samples, seed)?
        .par_iter()
        .map(|xi| Ok(lookahead_arbitrage(&build_market(n, horizon, xi)?, kappa)?.terminal_wealth()))
        .collect::<Result<Vec<f64>>>()?;
    let m = samples as f64;
    let mean = profits.iter().sum::<f64>() / m;
    let var = profits.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(ArbitrageSample {
        n,
        kappa,
        samples,
        seed,
        mean,
        std_err: (var / m).sqrt(),
        positive_fraction: profits.iter().filter(|&&p| p > 0.0).count() as f64 / m,
    })
}
