//! Prediction processes, strategy projection and law distances.

use std::fmt;
use std::sync::Arc;

use num::{BigRational, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::{stream_rng, DiscreteMarket, PriceTree, ScenarioTree};
use crate::paths::{StepPath, TimeGrid};
use crate::utility::UtilitySpec;
use crate::wealth::{is_admissible, wealth_process, Strategy};

/// Process sampled by a cylinder function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    /// First scaled walk.
    X1,
    /// Second scaled walk.
    X2,
    /// Price `S̃`.
    Price,
    /// Volatility proxy `ν̃`.
    Vol,
}

impl Coordinate {
    fn sample(self, m: &DiscreteMarket, k: usize) -> f64 {
        match self {
            Self::X1 => m.x1.values()[k],
            Self::X2 => m.x2.values()[k],
            Self::Price => m.s_tilde[k],
            Self::Vol => m.nu_tilde()[k],
        }
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A bounded function of finitely many samples `(X_{a_1}, …, X_{a_m})`.
#[derive(Clone)]
pub struct CylinderFunction {
    pub name: String,
    /// Grid indices and the coordinate sampled at each.
    pub points: Vec<(usize, Coordinate)>,
    pub bound: f64,
    eval: Evaluator,
}

impl fmt::Debug for CylinderFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderFunction")
            .field("name", &self.name)
            .field("points", &self.points)
            .field("bound", &self.bound)
            .finish()
    }
}

impl CylinderFunction {
    pub fn new<F>(
        name: impl Into<String>,
        points: Vec<(usize, Coordinate)>,
        bound: f64,
        eval: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if points.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(invalid("cylinder sample times must be nondecreasing"));
        }
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(invalid(format!("bound must be finite and nonnegative, got {bound}")));
        }
        Ok(Self {
            name: name.into(),
            points,
            bound,
            eval: Arc::new(eval),
        })
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("const:{value}"), Vec::new(), value.abs(), move |_| value)
            .expect("constant is bounded")
    }

    pub fn evaluate(&self, market: &DiscreteMarket) -> Result<f64> {
        let mut args = Vec::with_capacity(self.points.len());
        for &(k, c) in &self.points {
            if k > market.n() {
                return Err(invalid(format!(
                    "{}: sample time {k} beyond the horizon index {}",
                    self.name,
                    market.n()
                )));
            }
            args.push(c.sample(market, k));
        }
        let v = (self.eval)(&args);
        if !(v.abs() <= self.bound * (1.0 + 1e-12)) {
            return Err(invalid(format!(
                "{}: value {v} exceeds the declared bound {}",
                self.name, self.bound
            )));
        }
        Ok(v)
    }
}

/// Test functions used to probe the prediction process of an `n`-step tree.
pub fn catalog(n: usize, horizon: f64) -> Vec<CylinderFunction> {
    let range = (n as f64 * horizon).sqrt();
    let mid = n.div_ceil(2);
    let clip = |v: f64, b: f64| v.clamp(-b, b);
    vec![
        CylinderFunction::constant(1.0),
        CylinderFunction::new("clip_x1_T", vec![(n, Coordinate::X1)], range + 1.0, move |v| {
            clip(v[0], range + 1.0)
        })
        .unwrap(),
        CylinderFunction::new("ind_price_T_gt_1", vec![(n, Coordinate::Price)], 1.0, |v| {
            f64::from(u8::from(v[0] > 1.0))
        })
        .unwrap(),
        CylinderFunction::new(
            "clip_x2_mid_times_x2_T",
            vec![(mid, Coordinate::X2), (n, Coordinate::X2)],
            1.0,
            move |v| clip(v[0], 1.0) * clip(v[1], 1.0),
        )
        .unwrap(),
        CylinderFunction::new("min_price_mid_2", vec![(mid, Coordinate::Price)], 2.0, |v| {
            v[0].min(2.0)
        })
        .unwrap(),
        CylinderFunction::new(
            "ind_x1_T_pos_times_clip_vol_T",
            vec![(n, Coordinate::X1), (n, Coordinate::Vol)],
            3.0,
            |v| if v[0] > 0.0 { v[1].clamp(0.0, 3.0) } else { 0.0 },
        )
        .unwrap(),
    ]
}

/// `Y_k = E[ψ | F_k]` at every tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionProcess {
    pub grid: TimeGrid,
    /// `levels[k][j]`: value at level `k`, node `j`.
    pub levels: Vec<Vec<f64>>,
}

impl PredictionProcess {
    pub fn initial(&self) -> f64 {
        self.levels[0][0]
    }

    pub fn scenario_path(&self, id: usize) -> StepPath {
        let n = self.grid.steps();
        let values = (0..=n).map(|k| self.levels[k][id >> (n - k)]).collect();
        StepPath::new(self.grid, values).expect("prediction values are finite")
    }

    /// Largest `|mean(children) - parent| / max(1, |parent|)`.
    pub fn martingale_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.grid.steps() {
            for (j, &p) in self.levels[k].iter().enumerate() {
                let mean = 0.5 * (self.levels[k + 1][2 * j] + self.levels[k + 1][2 * j + 1]);
                worst = worst.max((mean - p).abs() / p.abs().max(1.0));
            }
        }
        worst
    }
}

fn terminal_values(tree: &ScenarioTree, psi: &CylinderFunction) -> Result<Vec<f64>> {
    tree.markets().iter().map(|m| psi.evaluate(m)).collect()
}

/// Each node value is the plain average of `ψ` over the leaves below it.
pub fn prediction_process(tree: &ScenarioTree, psi: &CylinderFunction) -> Result<PredictionProcess> {
    let values = terminal_values(tree, psi)?;
    let n = tree.n();
    let levels = (0..=n)
        .map(|k| {
            let width = 1usize << (n - k);
            values
                .chunks(width)
                .map(|c| c.iter().sum::<f64>() / width as f64)
                .collect()
        })
        .collect();
    Ok(PredictionProcess {
        grid: *tree.grid(),
        levels,
    })
}

/// `Y_0` computed by backward halving and by the plain scenario average,
/// both in rational arithmetic on the `f64` values of `ψ`.
pub fn exact_initial_value(
    tree: &ScenarioTree,
    psi: &CylinderFunction,
) -> Result<(BigRational, BigRational)> {
    let values = terminal_values(tree, psi)?
        .into_iter()
        .map(|v| BigRational::from_float(v).ok_or_else(|| invalid("non-finite ψ value")))
        .collect::<Result<Vec<_>>>()?;
    let two = BigRational::from_integer(2.into());
    let mut level = values.clone();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|c| (&c[0] + &c[1]) / &two)
            .collect();
    }
    let count = BigRational::from_integer(values.len().into());
    let sum = values.iter().fold(BigRational::zero(), |a, b| a + b);
    Ok((level.remove(0), sum / count))
}

/// Partition of the scenarios at every level into information cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarsePartition {
    /// `labels[k][id]`: cell of scenario `id` at level `k`.
    pub labels: Vec<Vec<usize>>,
}

impl CoarsePartition {
    /// The tree's own filtration.
    pub fn tree(n: usize) -> Self {
        Self {
            labels: (0..=n)
                .map(|k| (0..1usize << n).map(|id| id >> (n - k)).collect())
                .collect(),
        }
    }

    /// Information generated by signs `ξ_2, …, ξ_k`, ignoring `ξ_1`.
    pub fn without_first_sign(n: usize) -> Self {
        Self {
            labels: (0..=n)
                .map(|k| {
                    (0..1usize << n)
                        .map(|id| {
                            if k <= 1 {
                                0
                            } else {
                                (id >> (n - k)) & ((1 << (k - 1)) - 1)
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Rejects partitions whose cells are not unions of tree nodes.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.labels.len() != n + 1 {
            return Err(Error::LengthMismatch {
                expected: n + 1,
                actual: self.labels.len(),
            });
        }
        for (k, lab) in self.labels.iter().enumerate() {
            if lab.len() != 1 << n {
                return Err(Error::LengthMismatch {
                    expected: 1 << n,
                    actual: lab.len(),
                });
            }
            let width = 1usize << (n - k);
            if lab.chunks(width).any(|c| c.iter().any(|&l| l != c[0])) {
                return Err(Error::NotCoarsening { level: k });
            }
        }
        Ok(())
    }
}

/// Replaces each holding by its probability-weighted average over the
/// coarse cell of the scenario at that date.
pub fn project_strategy(
    tree: &PriceTree,
    fine: &[Strategy],
    coarse: &CoarsePartition,
) -> Result<Vec<Strategy>> {
    let n = tree.n();
    let count = tree.scenario_count();
    if fine.len() != count {
        return Err(Error::LengthMismatch {
            expected: count,
            actual: fine.len(),
        });
    }
    if fine.iter().any(|s| s.grid().steps() != n) {
        return Err(Error::IncompatibleGrids("strategy grid differs from the tree".into()));
    }
    coarse.validate(n)?;
    let mut holdings = vec![vec![0.0; n + 1]; count];
    for k in 0..n {
        let lab = &coarse.labels[k];
        let cells = lab.iter().copied().max().unwrap_or(0) + 1;
        let mut sum = vec![0.0; cells];
        let mut weight = vec![0usize; cells];
        for (id, s) in fine.iter().enumerate() {
            sum[lab[id]] += s.holdings()[k];
            weight[lab[id]] += 1;
        }
        for (id, h) in holdings.iter_mut().enumerate() {
            let cell = lab[id];
            h[k] = sum[cell] / weight[cell] as f64;
        }
    }
    holdings
        .into_iter()
        .map(|h| Strategy::new(*tree.grid(), h))
        .collect()
}

/// Whether every holding is constant on the cells of `partition`.
pub fn is_adapted(strategies: &[Strategy], partition: &CoarsePartition) -> bool {
    let n = partition.labels.len().saturating_sub(1);
    for k in 0..n {
        let lab = &partition.labels[k];
        let mut seen: Vec<Option<f64>> = vec![None; lab.iter().copied().max().unwrap_or(0) + 1];
        for (id, s) in strategies.iter().enumerate() {
            let h = s.holdings()[k];
            match seen[lab[id]] {
                Some(v) if v != h => return false,
                Some(_) => {}
                None => seen[lab[id]] = Some(h),
            }
        }
    }
    true
}

/// A capped-volatility market driven by `ξ_2, …, ξ_n`, with `ξ_1` an
/// independent coin that does not move the price.
pub fn noise_coin_tree(n: usize, horizon: f64) -> Result<PriceTree> {
    if n < 2 {
        return Err(invalid("the noise-coin tree needs n >= 2"));
    }
    let inner = PriceTree::capped(n - 1, horizon * (n - 1) as f64 / n as f64)?;
    PriceTree::from_fn(TimeGrid::new(n, horizon)?, |prefix| {
        if prefix.len() <= 1 {
            return 1.0;
        }
        let signs = &prefix[1..];
        let node = signs
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | usize::from(s > 0));
        inner.price(signs.len(), node)
    })
}

/// Random strategies on the noise-coin tree that see `ξ_1` from time 0.
///
/// At date `k` the candidate holding is `amplitude · (a ξ_1 + b)` with `a, b`
/// uniform on `[-1, 1]` and drawn once per cell of `ξ_2, …, ξ_k`. Each
/// candidate is shrunk toward 0 until `x + V` stays nonnegative now and at
/// both successor prices, so every strategy is admissible for `x`.
pub fn peeking_strategies(
    tree: &PriceTree,
    x: f64,
    kappa: f64,
    amplitude: f64,
    seed: u64,
) -> Result<Vec<Strategy>> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(invalid(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(format!("capital must be positive, got {x}")));
    }
    let n = tree.n();
    let coarse = CoarsePartition::without_first_sign(n);
    let tables: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|k| {
            let cells = if k <= 1 { 1 } else { 1usize << (k - 1) };
            let mut rng = stream_rng(seed, k as u64);
            (0..cells)
                .map(|_| (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
                .collect()
        })
        .collect();
    (0..tree.scenario_count())
        .map(|id| {
            let xi1 = if (id >> (n - 1)) & 1 == 1 { 1.0 } else { -1.0 };
            let mut hs = vec![0.0; n + 1];
            let (mut cash, mut prev) = (0.0, 0.0);
            for k in 0..n {
                let j = tree.node_of(id, k);
                let s = tree.price(k, j);
                let after = |h: f64| cash - s * (h - prev) - kappa * s * (h - prev).abs();
                // Concave in h and nonnegative at h = 0, so the safe set is
                // an interval around 0.
                let safe = |h: f64| {
                    let c = after(h);
                    [s, tree.price(k + 1, 2 * j), tree.price(k + 1, 2 * j + 1)]
                        .iter()
                        .all(|&p| x + c + h * p - kappa * h.abs() * p >= 0.0)
                };
                let (a, b) = tables[k][coarse.labels[k][id]];
                let target = amplitude * (a * xi1 + b);
                let h = if safe(target) {
                    target
                } else {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if safe(mid * target) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo * target
                };
                cash = after(h);
                prev = h;
                hs[k] = h;
            }
            Strategy::new(*tree.grid(), hs)
        })
        .collect()
}

/// `E[U(x + V_T, S_T)]` of per-scenario strategies on an equally weighted
/// tree. Fails if any strategy is inadmissible for `x`.
pub fn expected_utility(
    tree: &PriceTree,
    strategies: &[Strategy],
    u: &UtilitySpec,
    x: f64,
    kappa: f64,
) -> Result<f64> {
    if strategies.len() != tree.scenario_count() {
        return Err(Error::LengthMismatch {
            expected: tree.scenario_count(),
            actual: strategies.len(),
        });
    }
    let p = tree.scenario_probability();
    let mut total = 0.0;
    for (id, g) in strategies.iter().enumerate() {
        let prices = tree.scenario_prices(id);
        let trace = wealth_process(&prices, g, kappa)?;
        if !is_admissible(x, &trace) {
            return Err(Error::Inadmissible { capital: x });
        }
        total += p * u.eval_unchecked((x + trace.terminal_wealth).max(0.0), prices[tree.n()]);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawDistance {
    /// Two-sample Kolmogorov–Smirnov statistic per coordinate.
    pub ks: Vec<f64>,
    /// Energy distance `2E|X-Y| - E|X-X'| - E|Y-Y'|` of the joint samples.
    pub energy: f64,
    pub samples_a: usize,
    pub samples_b: usize,
}

pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0.0f64;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

fn mean_pair_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for p in a {
        for q in b {
            total += p
                .iter()
                .zip(q)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
        }
    }
    total / (a.len() * b.len()) as f64
}

pub fn law_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<LawDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("law_distance needs nonempty samples"));
    }
    let arity = a[0].len();
    if let Some(bad) = a.iter().chain(b).find(|t| t.len() != arity) {
        return Err(Error::LengthMismatch {
            expected: arity,
            actual: bad.len(),
        });
    }
    let ks = (0..arity)
        .map(|c| {
            let xa: Vec<f64> = a.iter().map(|t| t[c]).collect();
            let xb: Vec<f64> = b.iter().map(|t| t[c]).collect();
            ks_statistic(&xa, &xb)
        })
        .collect();
    let energy = (2.0 * mean_pair_distance(a, b) - mean_pair_distance(a, a) - mean_pair_distance(b, b))
        .max(0.0);
    Ok(LawDistance {
        ks,
        energy,
        samples_a: a.len(),
        samples_b: b.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::enumerate_tree;
    use crate::wealth::Strategy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_and_martingale_examples() {
        let tree = enumerate_tree(4, 1.0).unwrap();
        let y = prediction_process(&tree, &CylinderFunction::constant(0.7)).unwrap();
        assert!(y.levels.iter().flatten().all(|&v| (v - 0.7).abs() < 1e-15));

        let psi = &catalog(4, 1.0)[1];
        let y = prediction_process(&tree, psi).unwrap();
        for (id, m) in tree.markets().iter().enumerate() {
            let path = y.scenario_path(id);
            for k in 0..=4 {
                assert_abs_diff_eq!(path.values()[k], m.x1.values()[k], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn indicator_example() {
        let tree = enumerate_tree(2, 1.0).unwrap();
        let psi = &catalog(2, 1.0)[2];
        let y = prediction_process(&tree, psi).unwrap();
        assert_eq!(y.initial(), 0.25);
        let (rec, avg) = exact_initial_value(&tree, psi).unwrap();
        assert_eq!(rec, avg);
        assert_eq!(rec, BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn catalog_martingales() {
        for n in [1, 3, 6] {
            let tree = enumerate_tree(n, 1.0).unwrap();
            for psi in catalog(n, 1.0) {
                let y = prediction_process(&tree, &psi).unwrap();
                assert!(y.martingale_defect() <= 1e-12, "{} n={n}", psi.name);
                let (rec, avg) = exact_initial_value(&tree, &psi).unwrap();
                assert_eq!(rec, avg);
            }
        }
    }

    #[test]
    fn bound_is_enforced() {
        let tree = enumerate_tree(2, 1.0).unwrap();
        let liar =
            CylinderFunction::new("liar", vec![(2, Coordinate::Price)], 0.5, |v| v[0]).unwrap();
        assert!(prediction_process(&tree, &liar).is_err());
        assert!(CylinderFunction::new("t", vec![(2, Coordinate::X1), (1, Coordinate::X1)], 1.0, |_| 0.0).is_err());
    }

    #[test]
    fn partitions() {
        CoarsePartition::tree(3).validate(3).unwrap();
        CoarsePartition::without_first_sign(3).validate(3).unwrap();
        let mut bad = CoarsePartition::tree(2);
        bad.labels[1] = vec![0, 1, 1, 1];
        assert_eq!(bad.validate(2), Err(Error::NotCoarsening { level: 1 }));
    }

    fn peek_first(tree: &PriceTree, h: f64) -> Vec<Strategy> {
        let n = tree.n();
        (0..tree.scenario_count())
            .map(|id| {
                let xi1 = if id >> (n - 1) & 1 == 1 { 1.0 } else { -1.0 };
                let mut hs = vec![0.0; n + 1];
                hs[0] = h * xi1;
                Strategy::new(*tree.grid(), hs).unwrap()
            })
            .collect()
    }

    #[test]
    fn projection_of_peek_is_zero() {
        let tree = PriceTree::capped(3, 1.0).unwrap();
        let coarse = CoarsePartition::tree(3);
        let out = project_strategy(&tree, &peek_first(&tree, 1.0), &coarse).unwrap();
        assert!(out.iter().all(|s| s.holdings().iter().all(|&h| h == 0.0)));
    }

    #[test]
    fn adapted_strategy_unchanged() {
        let tree = PriceTree::capped(3, 1.0).unwrap();
        let fine: Vec<Strategy> = (0..8usize)
            .map(|id| {
                let hs = (0..=3)
                    .map(|k| if k == 3 { 0.0 } else { (id >> (3 - k)) as f64 * 0.1 })
                    .collect();
                Strategy::new(*tree.grid(), hs).unwrap()
            })
            .collect();
        let out = project_strategy(&tree, &fine, &CoarsePartition::tree(3)).unwrap();
        assert_eq!(out, fine);
        assert!(is_adapted(&out, &CoarsePartition::tree(3)));
        assert!(!is_adapted(&fine, &CoarsePartition::without_first_sign(3)));
    }

    #[test]
    fn noise_tree_ignores_first_sign() {
        let tree = noise_coin_tree(4, 1.0).unwrap();
        for k in 1..=4 {
            let half = 1usize << (k - 1);
            for j in 0..half {
                assert_eq!(tree.price(k, j), tree.price(k, j + half));
            }
        }
        assert_eq!(tree.price(1, 0), 1.0);
        assert!(noise_coin_tree(1, 1.0).is_err());
    }

    #[test]
    fn jensen_on_noise_tree() {
        let n = 4;
        let tree = noise_coin_tree(n, 1.0).unwrap();
        let coarse = CoarsePartition::without_first_sign(n);
        let (x, kappa) = (0.2, 0.05);
        let u = UtilitySpec::Shortfall { strike: 1.0 };
        let fine = peek_first(&tree, 1.0);
        let proj = project_strategy(&tree, &fine, &coarse).unwrap();
        let eu = |s: &[Strategy]| -> f64 {
            s.iter()
                .enumerate()
                .map(|(id, g)| {
                    let p = tree.scenario_prices(id);
                    let w = wealth_process(&p, g, kappa).unwrap();
                    assert!(is_admissible(x, &w));
                    u.evaluate(x + w.terminal_wealth, p[n]).unwrap() / 16.0
                })
                .sum()
        };
        assert!(eu(&proj) > eu(&fine));
    }

    #[test]
    fn random_peeking_strategies_improve_under_projection() {
        let u = UtilitySpec::Shortfall { strike: 1.0 };
        let (x, kappa) = (0.1, 0.05);
        for n in 2..=5 {
            let tree = noise_coin_tree(n, 1.0).unwrap();
            let coarse = CoarsePartition::without_first_sign(n);
            for seed in 0..5 {
                let fine = peeking_strategies(&tree, x, kappa, 0.5, seed).unwrap();
                let proj = project_strategy(&tree, &fine, &coarse).unwrap();
                let a = expected_utility(&tree, &fine, &u, x, kappa).unwrap();
                let b = expected_utility(&tree, &proj, &u, x, kappa).unwrap();
                assert!(b >= a - 1e-12, "n={n} seed={seed}: {b} < {a}");
            }
        }
        let tree = noise_coin_tree(3, 1.0).unwrap();
        assert_eq!(
            peeking_strategies(&tree, x, kappa, 0.5, 9).unwrap(),
            peeking_strategies(&tree, x, kappa, 0.5, 9).unwrap()
        );
    }

    #[test]
    fn law_distance_examples() {
        let a: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.1, (i % 3) as f64]).collect();
        let d = law_distance(&a, &a).unwrap();
        assert_eq!(d.ks, vec![0.0, 0.0]);
        assert_eq!(d.energy, 0.0);

        let zeros = vec![vec![0.0]; 5];
        let ones = vec![vec![1.0]; 7];
        let d = law_distance(&zeros, &ones).unwrap();
        assert_eq!(d.ks, vec![1.0]);
        assert_abs_diff_eq!(d.energy, 2.0, epsilon = 1e-15);
        assert!(law_distance(&zeros, &[vec![1.0, 2.0]]).is_err());
        assert!(law_distance(&[], &ones).is_err());
    }

    proptest! {
        #[test]
        fn ks_is_symmetric_and_bounded(
            a in prop::collection::vec(-3.0..3.0f64, 1..40),
            b in prop::collection::vec(-3.0..3.0f64, 1..40),
        ) {
            let ab = ks_statistic(&a, &b);
            prop_assert_eq!(ab, ks_statistic(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn projection_preserves_level_means(
            raw in prop::collection::vec(-1.0..1.0f64, 16 * 4),
        ) {
            let tree = noise_coin_tree(4, 1.0).unwrap();
            let fine: Vec<Strategy> = raw
                .chunks(4)
                .map(|c| {
                    let mut hs = c.to_vec();
                    hs.push(0.0);
                    Strategy::new(*tree.grid(), hs).unwrap()
                })
                .collect();
            let partitions = [CoarsePartition::tree(4), CoarsePartition::without_first_sign(4)];
            for coarse in &partitions {
                let proj = project_strategy(&tree, &fine, coarse).unwrap();
                for k in 0..=4 {
                    let a: f64 = fine.iter().map(|s| s.holdings()[k]).sum();
                    let b: f64 = proj.iter().map(|s| s.holdings()[k]).sum();
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
