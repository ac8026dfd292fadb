//! Capped-volatility random-walk markets and the stochastic-volatility limit.
//!
//! For a sign sequence `ξ ∈ {-1,+1}^n` the market is driven by the scaled walks
//! `X¹_k = √(T/n) Σ_{i≤k} ξ_i` and `X²_k = √(T/n) Σ_{i≤k} Π_{j≤i} ξ_j`. The
//! volatility proxy is `ν̃_k = Π_{i≤k} (1 + √(T/n) ξ_i)` and the price is
//!
//! ```text
//! S̃_k = Π_{i≤k} (1 + min(ν̃_{i-1}, ln n) √(T/n) Π_{j≤i} ξ_j)
//! ```
//!
//! which is a martingale under the uniform measure on sign sequences. The
//! continuous-time price path interpolates `S̃` linearly with a one-period lag,
//! so that at grid time `kT/n` it equals `S̃_{k-1}` (with `S̃_{-1} = 1`).
//!
//! Scenarios are ordered lexicographically with `-1 < +1` and `ξ_1` the most
//! significant sign; the same ordering indexes tree nodes, so the node of a
//! scenario at level `k` is `id >> (n - k)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::{LinearPath, StepPath, TimeGrid};

/// Largest `n` for which the full tree is enumerated unless overridden.
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

/// A sign sequence `ξ_1..ξ_n` carrying probability `2^{-n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    signs: Vec<i8>,
}

impl Scenario {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(invalid("scenario needs at least one sign"));
        }
        if let Some(k) = signs.iter().position(|&s| s != 1 && s != -1) {
            return Err(invalid(format!("sign at position {} is not ±1", k + 1)));
        }
        Ok(Self { signs })
    }

    /// Scenario number `id` in lexicographic order.
    pub fn from_index(n: usize, id: u64) -> Result<Self> {
        if n == 0 || n > 63 || id >= 1u64 << n {
            return Err(invalid(format!("scenario index {id} out of range for n = {n}")));
        }
        let signs = (0..n)
            .map(|i| if (id >> (n - 1 - i)) & 1 == 1 { 1 } else { -1 })
            .collect();
        Ok(Self { signs })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn probability(&self) -> f64 {
        0.5f64.powi(self.signs.len() as i32)
    }

    /// Position in lexicographic order (only defined for `n ≤ 63`).
    pub fn index(&self) -> u64 {
        self.signs
            .iter()
            .fold(0u64, |acc, &s| (acc << 1) | u64::from(s == 1))
    }

    pub fn flipped(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }
}

fn check_len(n: usize, xi: &Scenario) -> Result<()> {
    if xi.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: xi.len(),
        });
    }
    Ok(())
}

/// The two scaled random walks `(X¹, X²)` on the grid `kT/n`.
pub fn scaled_walks(n: usize, horizon: f64, xi: &Scenario) -> Result<(StepPath, StepPath)> {
    let grid = TimeGrid::new(n, horizon)?;
    check_len(n, xi)?;
    let a = grid.dt().sqrt();
    let mut x1 = Vec::with_capacity(n + 1);
    let mut x2 = Vec::with_capacity(n + 1);
    let (mut s1, mut s2, mut prod) = (0i64, 0i64, 1i64);
    x1.push(0.0);
    x2.push(0.0);
    for &s in xi.signs() {
        prod *= i64::from(s);
        s1 += i64::from(s);
        s2 += prod;
        x1.push(a * s1 as f64);
        x2.push(a * s2 as f64);
    }
    Ok((StepPath::new(grid, x1)?, StepPath::new(grid, x2)?))
}

/// One scenario of the discrete market.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMarket {
    pub grid: TimeGrid,
    pub scenario: Scenario,
    pub x1: StepPath,
    pub x2: StepPath,
    /// `ν_t = ν̃_{⌊nt/T⌋}`.
    pub nu: StepPath,
    /// `S̃_0..S̃_n`.
    pub s_tilde: Vec<f64>,
    /// Lagged linear interpolation of `S̃`.
    pub s_interp: LinearPath,
    /// Volatility cap `ln n`.
    pub cap: f64,
}

impl DiscreteMarket {
    pub fn n(&self) -> usize {
        self.grid.steps()
    }

    pub fn nu_tilde(&self) -> &[f64] {
        self.nu.values()
    }

    pub fn terminal_price(&self) -> f64 {
        self.s_tilde[self.n()]
    }
}

/// Multiplicative step coefficients `min(ν̃_{i-1}, ln n) √(T/n)` together with
/// `ν̃`, checked for positivity. Shared by the scenario and tree builders.
struct Recursion {
    a: f64,
    cap: f64,
    n: usize,
}

impl Recursion {
    fn new(n: usize, horizon: f64) -> Self {
        Self {
            a: (horizon / n as f64).sqrt(),
            cap: (n as f64).ln(),
            n,
        }
    }

    /// Advances `(ν̃, Πξ, S̃)` by one sign; `step` is the 1-based step index.
    fn advance(&self, step: usize, nu: f64, prod: i8, s: f64, sign: i8) -> Result<(f64, i8, f64)> {
        let prod = prod * sign;
        let coeff = nu.min(self.cap) * self.a;
        let factor = 1.0 + coeff * f64::from(prod);
        if factor <= 0.0 {
            return Err(Error::PositivityViolation { step, factor });
        }
        let nu_factor = 1.0 + self.a * f64::from(sign);
        // ν̃_n never feeds a price factor, so it may touch zero.
        if nu_factor < 0.0 || (nu_factor == 0.0 && step < self.n) {
            return Err(Error::PositivityViolation {
                step,
                factor: nu_factor,
            });
        }
        Ok((nu * nu_factor, prod, s * factor))
    }
}

pub fn build_market(n: usize, horizon: f64, xi: &Scenario) -> Result<DiscreteMarket> {
    let (x1, x2) = scaled_walks(n, horizon, xi)?;
    let grid = *x1.grid();
    let rec = Recursion::new(n, horizon);
    let mut nu = Vec::with_capacity(n + 1);
    let mut s = Vec::with_capacity(n + 1);
    let (mut nu_k, mut prod, mut s_k) = (1.0, 1i8, 1.0);
    nu.push(nu_k);
    s.push(s_k);
    for (i, &sign) in xi.signs().iter().enumerate() {
        (nu_k, prod, s_k) = rec.advance(i + 1, nu_k, prod, s_k, sign)?;
        nu.push(nu_k);
        s.push(s_k);
    }
    let lagged: Vec<f64> = (0..=n).map(|k| if k == 0 { 1.0 } else { s[k - 1] }).collect();
    Ok(DiscreteMarket {
        grid,
        scenario: xi.clone(),
        x1,
        x2,
        nu: StepPath::new(grid, nu)?,
        s_interp: LinearPath::new(grid, lagged)?,
        s_tilde: s,
        cap: rec.cap,
    })
}

/// All `2^n` scenarios of the market, each with probability `2^{-n}`.
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    grid: TimeGrid,
    markets: Vec<DiscreteMarket>,
}

impl ScenarioTree {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.steps()
    }

    pub fn markets(&self) -> &[DiscreteMarket] {
        &self.markets
    }

    pub fn len(&self) -> usize {
        self.markets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markets.is_empty()
    }

    pub fn probability(&self) -> f64 {
        0.5f64.powi(self.n() as i32)
    }

    /// Node-indexed trading prices `S̃_k`.
    pub fn price_tree(&self) -> PriceTree {
        let n = self.n();
        let levels = (0..=n)
            .map(|k| {
                (0..1usize << k)
                    .map(|j| self.markets[j << (n - k)].s_tilde[k])
                    .collect()
            })
            .collect();
        PriceTree {
            grid: self.grid,
            levels,
        }
    }
}

pub fn enumerate_tree(n: usize, horizon: f64) -> Result<ScenarioTree> {
    enumerate_tree_capped(n, horizon, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_tree_capped(n: usize, horizon: f64, cap: usize) -> Result<ScenarioTree> {
    let grid = TimeGrid::new(n, horizon)?;
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "tree enumeration for n = {n} exceeds the cap {cap}"
        )));
    }
    let markets = (0..1u64 << n)
        .into_par_iter()
        .map(|id| build_market(n, horizon, &Scenario::from_index(n, id)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioTree { grid, markets })
}

/// Trading prices at the nodes of a binary tree with equiprobable branches.
///
/// `levels[k][j]` is the price at level `k`, node `j`; the children of node `j`
/// are `2j` (sign −1) and `2j + 1` (sign +1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTree {
    grid: TimeGrid,
    levels: Vec<Vec<f64>>,
}

impl PriceTree {
    pub fn from_levels(grid: TimeGrid, levels: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.steps();
        if n > 30 {
            return Err(Error::ResourceLimit(format!("price tree depth {n} too large")));
        }
        if levels.len() != n + 1 {
            return Err(Error::LengthMismatch {
                expected: n + 1,
                actual: levels.len(),
            });
        }
        for (k, level) in levels.iter().enumerate() {
            if level.len() != 1 << k {
                return Err(Error::LengthMismatch {
                    expected: 1 << k,
                    actual: level.len(),
                });
            }
            if let Some(j) = level.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(Error::NonPositivePrice {
                    index: k,
                    price: level[j],
                });
            }
        }
        Ok(Self { grid, levels })
    }

    /// Builds a tree from a price function of the sign prefix `ξ_1..ξ_k`.
    pub fn from_fn<F>(grid: TimeGrid, mut price: F) -> Result<Self>
    where
        F: FnMut(&[i8]) -> f64,
    {
        let n = grid.steps();
        if n > 30 {
            return Err(Error::ResourceLimit(format!("price tree depth {n} too large")));
        }
        let mut levels = Vec::with_capacity(n + 1);
        let mut prefix = Vec::with_capacity(n);
        for k in 0..=n {
            let mut level = Vec::with_capacity(1 << k);
            for j in 0..1usize << k {
                prefix.clear();
                prefix.extend((0..k).map(|i| if (j >> (k - 1 - i)) & 1 == 1 { 1i8 } else { -1 }));
                level.push(price(&prefix));
            }
            levels.push(level);
        }
        Self::from_levels(grid, levels)
    }

    /// The capped-volatility market, built node by node.
    pub fn capped(n: usize, horizon: f64) -> Result<Self> {
        let grid = TimeGrid::new(n, horizon)?;
        if n > 30 {
            return Err(Error::ResourceLimit(format!("price tree depth {n} too large")));
        }
        let rec = Recursion::new(n, horizon);
        let mut state = vec![(1.0f64, 1i8, 1.0f64)];
        let mut levels = vec![vec![1.0]];
        for k in 1..=n {
            let mut next = Vec::with_capacity(state.len() * 2);
            for &(nu, prod, s) in &state {
                for sign in [-1i8, 1] {
                    next.push(rec.advance(k, nu, prod, s, sign)?);
                }
            }
            levels.push(next.iter().map(|t| t.2).collect());
            state = next;
        }
        Self::from_levels(grid, levels)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.steps()
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn price(&self, level: usize, node: usize) -> f64 {
        self.levels[level][node]
    }

    pub fn scenario_count(&self) -> usize {
        1 << self.n()
    }

    pub fn scenario_probability(&self) -> f64 {
        0.5f64.powi(self.n() as i32)
    }

    /// Node of scenario `id` at level `k`.
    pub fn node_of(&self, id: usize, k: usize) -> usize {
        id >> (self.n() - k)
    }

    pub fn scenario_prices(&self, id: usize) -> Vec<f64> {
        (0..=self.n()).map(|k| self.levels[k][self.node_of(id, k)]).collect()
    }

    pub fn terminal_prices(&self) -> &[f64] {
        &self.levels[self.n()]
    }

    pub fn min_price(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `count` scenarios drawn uniformly; scenario `i` uses ChaCha8 stream `i` of
/// `seed`, so the draw does not depend on how the work is split.
pub fn sample_scenarios(n: usize, count: usize, seed: u64) -> Result<Vec<Scenario>> {
    if n == 0 {
        return Err(invalid("scenarios need at least one step"));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            Scenario::new((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
        })
        .collect()
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters of the limit model `dν = ν dX¹`, `dS = νS dX²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitModelParams {
    pub horizon: f64,
    pub s0: f64,
    pub nu0: f64,
    pub steps: usize,
    pub seed: u64,
}

impl LimitModelParams {
    pub fn new(horizon: f64, steps: usize, seed: u64) -> Self {
        Self {
            horizon,
            s0: 1.0,
            nu0: 1.0,
            steps,
            seed,
        }
    }
}

/// Standard-normal increments for path `path`, two per step.
pub trait IncrementSource: Sync {
    fn fill(&self, path: u64, z1: &mut [f64], z2: &mut [f64]);
}

/// Counter-based ChaCha8 normals: path `i` reads stream `i` of the seed.
#[derive(Debug, Clone, Copy)]
pub struct ChaChaNormals {
    pub seed: u64,
}

impl IncrementSource for ChaChaNormals {
    fn fill(&self, path: u64, z1: &mut [f64], z2: &mut [f64]) {
        let mut rng = stream_rng(self.seed, path);
        for (a, b) in z1.iter_mut().zip(z2.iter_mut()) {
            *a = rng.sample(StandardNormal);
            *b = rng.sample(StandardNormal);
        }
    }
}

/// Zero increments; isolates the drift terms of the scheme.
#[derive(Debug, Clone, Copy)]
pub struct ZeroIncrements;

impl IncrementSource for ZeroIncrements {
    fn fill(&self, _path: u64, z1: &mut [f64], z2: &mut [f64]) {
        z1.fill(0.0);
        z2.fill(0.0);
    }
}

/// One simulated path of `(ν, S)` on the Euler grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPath {
    pub nu: Vec<f64>,
    pub s: Vec<f64>,
}

impl LimitPath {
    pub fn terminal(&self) -> (f64, f64) {
        (*self.nu.last().unwrap(), *self.s.last().unwrap())
    }
}

pub fn simulate_limit(params: &LimitModelParams, paths: usize) -> Result<Vec<LimitPath>> {
    simulate_limit_with(params, paths, &ChaChaNormals { seed: params.seed })
}

/// Log-Euler scheme with the volatility frozen at the left endpoint:
/// `ν ← ν exp(ΔX¹ - Δt/2)`, `S ← S exp(ν ΔX² - ν² Δt/2)`.
pub fn simulate_limit_with<S: IncrementSource>(
    params: &LimitModelParams,
    paths: usize,
    source: &S,
) -> Result<Vec<LimitPath>> {
    if params.steps == 0 {
        return Err(invalid("limit simulation needs at least one step"));
    }
    if paths == 0 {
        return Err(invalid("limit simulation needs at least one path"));
    }
    if !(params.horizon.is_finite() && params.horizon > 0.0) {
        return Err(invalid("limit horizon must be positive"));
    }
    let steps = params.steps;
    let dt = params.horizon / steps as f64;
    let sq = dt.sqrt();
    Ok((0..paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut z1 = vec![0.0; steps];
            let mut z2 = vec![0.0; steps];
            source.fill(p, &mut z1, &mut z2);
            let mut nu = Vec::with_capacity(steps + 1);
            let mut s = Vec::with_capacity(steps + 1);
            let (mut v, mut x) = (params.nu0, params.s0);
            nu.push(v);
            s.push(x);
            for k in 0..steps {
                let next_x = x * (v * sq * z2[k] - 0.5 * v * v * dt).exp();
                v *= (sq * z1[k] - 0.5 * dt).exp();
                x = next_x;
                nu.push(v);
                s.push(x);
            }
            LimitPath { nu, s }
        })
        .collect())
}
