//! Consistent price systems for the capped-volatility market.
//!
//! The shadow price `M_t = S̃_{⌊nt/T⌋}` is a martingale under the tree
//! measure. It is consistent with transaction costs `κ` as soon as its
//! relative distance to the interpolated price stays below `κ`.

use num::{BigRational, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::{build_market, sample_scenarios, DiscreteMarket, PriceTree, Scenario};
use crate::paths::{merged_points, LinearPath, StepPath};
use crate::wealth::{is_admissible, wealth_process, Strategy};

/// Martingale defects are judged relative to the node price.
pub const MARTINGALE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSystem {
    pub m: StepPath,
    /// `sup_t |M_t - S_t| / S_t` against the market's interpolated price.
    pub epsilon_margin: f64,
}

pub fn shadow_martingale(market: &DiscreteMarket) -> PriceSystem {
    let m = StepPath::new(market.grid, market.s_tilde.clone()).expect("market prices are finite");
    let epsilon_margin = cps_margin(&m, &market.s_interp).expect("market paths share a grid");
    PriceSystem { m, epsilon_margin }
}

/// `sup_t |m(t) - s(t)| / s(t)` for a step path `m` and a positive linear path
/// `s`. On every merged cell `m` is constant and `s` linear, so the ratio is
/// monotone there and the cell endpoints (with the left limit of `m` at the
/// right end) suffice.
pub fn cps_margin(m: &StepPath, s: &LinearPath) -> Result<f64> {
    m.grid().check_horizon(s.grid())?;
    if let Some(index) = s.values().iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositivePrice {
            index,
            price: s.values()[index],
        });
    }
    let horizon = m.grid().horizon();
    let points = merged_points(m.grid().steps(), s.grid().steps());
    let s_at = |p: &crate::paths::MergedPoint| {
        if p.on_right {
            s.values()[p.right]
        } else {
            s.value_at(p.frac * horizon)
        }
    };
    let rel = |mv: f64, sv: f64| (mv - sv).abs() / sv;
    let mut worst = 0.0f64;
    for w in points.windows(2) {
        let mv = m.values()[w[0].left];
        worst = worst.max(rel(mv, s_at(&w[0]))).max(rel(mv, s_at(&w[1])));
    }
    Ok(worst.max(rel(m.terminal(), s.terminal())))
}

/// Margin of the shadow price for one scenario.
pub fn scenario_margin(n: usize, horizon: f64, xi: &Scenario) -> Result<f64> {
    Ok(shadow_martingale(&build_market(n, horizon, xi)?).epsilon_margin)
}

/// Margins over the scenario space for a given `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginProfile {
    pub n: usize,
    /// Supremum over all scenarios, attained on the all-up path, which
    /// maximizes `ν̃` at every date.
    pub worst: f64,
    pub sample_max: f64,
    pub sample_mean: f64,
    pub samples: usize,
}

pub fn margin_profile(n: usize, horizon: f64, samples: usize, seed: u64) -> Result<MarginProfile> {
    let worst = scenario_margin(n, horizon, &Scenario::new(vec![1; n])?)?;
    let drawn = sample_scenarios(n, samples, seed)?;
    let margins = drawn
        .par_iter()
        .map(|xi| scenario_margin(n, horizon, xi))
        .collect::<Result<Vec<_>>>()?;
    let sample_max = margins.iter().copied().fold(0.0, f64::max);
    let sample_mean = if samples == 0 {
        0.0
    } else {
        margins.iter().sum::<f64>() / samples as f64
    };
    Ok(MarginProfile {
        n,
        worst,
        sample_max,
        sample_mean,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub ok: bool,
    /// Largest `|mean(children) - parent| / parent` over internal nodes.
    pub max_defect: f64,
    pub worst_level: usize,
    pub worst_node: usize,
}

pub fn verify_martingale(tree: &PriceTree) -> MartingaleCheck {
    let levels = tree.levels();
    let (max_defect, worst_level, worst_node) = (0..tree.n())
        .into_par_iter()
        .map(|k| {
            let (cur, next) = (&levels[k], &levels[k + 1]);
            cur.iter()
                .enumerate()
                .map(|(j, &p)| {
                    let mean = 0.5 * (next[2 * j] + next[2 * j + 1]);
                    ((mean - p).abs() / p.abs(), k, j)
                })
                .fold((0.0, k, 0), |a, b| if b.0 > a.0 { b } else { a })
        })
        .reduce(|| (0.0, 0, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    MartingaleCheck {
        ok: max_defect <= MARTINGALE_TOLERANCE,
        max_defect,
        worst_level,
        worst_node,
    }
}

/// Builds node-indexed prices from per-scenario price arrays in
/// lexicographic order, rejecting arrays that are not adapted to the tree.
pub fn price_tree_from_paths(
    grid: crate::paths::TimeGrid,
    paths: &[Vec<f64>],
) -> Result<PriceTree> {
    let n = grid.steps();
    if paths.len() != 1usize << n {
        return Err(Error::LengthMismatch {
            expected: 1 << n,
            actual: paths.len(),
        });
    }
    let mut levels: Vec<Vec<f64>> = (0..=n).map(|k| vec![f64::NAN; 1 << k]).collect();
    for (id, path) in paths.iter().enumerate() {
        if path.len() != n + 1 {
            return Err(Error::LengthMismatch {
                expected: n + 1,
                actual: path.len(),
            });
        }
        for (k, &v) in path.iter().enumerate() {
            let slot = &mut levels[k][id >> (n - k)];
            if slot.is_nan() {
                *slot = v;
            } else if *slot != v {
                return Err(invalid(format!(
                    "scenario {id} disagrees with its siblings at level {k}"
                )));
            }
        }
    }
    PriceTree::from_levels(grid, levels)
}

/// Node prices of the capped-volatility market in rational arithmetic.
///
/// The constants `√(T/n)` and `ln n` are taken as the rationals equal to
/// their `f64` values; every later operation is exact.
pub fn exact_price_levels(n: usize, horizon: f64) -> Result<Vec<Vec<BigRational>>> {
    if n == 0 || n > 16 {
        return Err(invalid(format!("exact tree needs 1 <= n <= 16, got {n}")));
    }
    let rat = |v: f64| BigRational::from_float(v).ok_or_else(|| invalid("non-finite constant"));
    let a = rat((horizon / n as f64).sqrt())?;
    let cap = rat((n as f64).ln())?;
    let one = BigRational::from_integer(1.into());
    let mut state = vec![(one.clone(), 1i8, one.clone())];
    let mut levels = vec![vec![one.clone()]];
    for k in 1..=n {
        let mut next = Vec::with_capacity(state.len() * 2);
        for (nu, prod, s) in &state {
            for sign in [-1i8, 1] {
                let prod = prod * sign;
                let coeff = nu.clone().min(cap.clone()) * &a;
                let factor = if prod > 0 { &one + &coeff } else { &one - &coeff };
                if !factor.is_positive() {
                    return Err(Error::PositivityViolation {
                        step: k,
                        factor: f64::NAN,
                    });
                }
                let nu_next = if sign > 0 { nu * (&one + &a) } else { nu * (&one - &a) };
                next.push((nu_next, prod, s * factor));
            }
        }
        levels.push(next.iter().map(|t| t.2.clone()).collect());
        state = next;
    }
    Ok(levels)
}

/// Largest `|mean(children) - parent|` over the exact tree.
pub fn exact_martingale_defect(n: usize, horizon: f64) -> Result<BigRational> {
    let levels = exact_price_levels(n, horizon)?;
    let two = BigRational::from_integer(2.into());
    let mut worst = BigRational::zero();
    for k in 0..n {
        for (j, p) in levels[k].iter().enumerate() {
            let mean = (&levels[k + 1][2 * j] + &levels[k + 1][2 * j + 1]) / &two;
            let d = (mean - p).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvBoundReport {
    /// `E[Σ_k S_k |Δγ_k|]` under the scenario weights.
    pub expected_volume: f64,
    pub x_over_eps: f64,
    /// Largest relative gap between shadow and trading prices.
    pub margin: f64,
    pub holds: bool,
}

/// Checks the volume bound `E[Σ S_k|Δγ_k|] ≤ x/ε` for admissible strategies
/// against a price system whose margin to the trading prices is at most
/// `κ - ε`.
///
/// `prices[i]` and `shadow[i]` are the trading and shadow prices of scenario
/// `i` at the trading dates.
pub fn tv_bound_check(
    strategies: &[Strategy],
    prices: &[Vec<f64>],
    shadow: &[Vec<f64>],
    probabilities: &[f64],
    x: f64,
    kappa: f64,
    eps: f64,
) -> Result<TvBoundReport> {
    let count = strategies.len();
    for len in [prices.len(), shadow.len(), probabilities.len()] {
        if len != count {
            return Err(Error::LengthMismatch {
                expected: count,
                actual: len,
            });
        }
    }
    if !(x > 0.0) {
        return Err(invalid(format!("capital must be positive, got {x}")));
    }
    if !(eps > 0.0 && eps <= kappa) {
        return Err(invalid(format!("margin ε = {eps} must lie in (0, κ]")));
    }
    let mut margin = 0.0f64;
    for (p, m) in prices.iter().zip(shadow) {
        if p.len() != m.len() {
            return Err(Error::LengthMismatch {
                expected: p.len(),
                actual: m.len(),
            });
        }
        for (&s, &mv) in p.iter().zip(m) {
            margin = margin.max((mv - s).abs() / s);
        }
    }
    if margin > kappa - eps + 1e-12 {
        return Err(Error::Precondition(format!(
            "price system margin {margin} exceeds κ - ε = {}",
            kappa - eps
        )));
    }
    let mut expected_volume = 0.0;
    for ((g, p), &w) in strategies.iter().zip(prices).zip(probabilities) {
        let trace = wealth_process(p, g, kappa)?;
        if !is_admissible(x, &trace) {
            return Err(Error::Inadmissible { capital: x });
        }
        expected_volume += w * g.traded_volume(p);
    }
    let x_over_eps = x / eps;
    Ok(TvBoundReport {
        expected_volume,
        x_over_eps,
        margin,
        holds: expected_volume <= x_over_eps * (1.0 + 1e-12),
    })
}

/// `E_Q[(dP/dQ)^q]` for a density given by its values and `Q`-weights.
pub fn moment_condition(ratios: &[f64], probabilities: &[f64], q: f64) -> Result<f64> {
    if ratios.len() != probabilities.len() || ratios.is_empty() {
        return Err(Error::LengthMismatch {
            expected: probabilities.len(),
            actual: ratios.len(),
        });
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid(format!("moment exponent must be at least 1, got {q}")));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0))
        || probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0))
    {
        return Err(Error::InvalidDensity(
            "ratios and weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = probabilities.iter().sum();
    let mean: f64 = ratios.iter().zip(probabilities).map(|(r, p)| r * p).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDensity(format!("weights sum to {total}")));
    }
    if (mean - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDensity(format!("density has mean {mean}")));
    }
    Ok(ratios
        .iter()
        .zip(probabilities)
        .map(|(r, p)| p * r.powf(q))
        .sum())
}
