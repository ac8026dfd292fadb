//! Paths on uniform time grids.
//!
//! Two path flavours are used across the crate: right-continuous step paths
//! (holdings, walks, shadow prices) and continuous piecewise-linear paths
//! (interpolated prices). Both store one value per grid point. Distances
//! between paths on different grids are computed on the merged grid, whose
//! points are located with integer arithmetic so that no breakpoint is lost to
//! floating-point round-off.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform grid `t_k = kT/n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("time grid needs at least one step"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { steps, horizon })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Grid time `t_k`; `t_n` is exactly the horizon.
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.horizon
        } else {
            k as f64 * self.horizon / self.steps as f64
        }
    }

    /// Index of the cell `[t_k, t_{k+1})` containing `t`, or `n` at the horizon.
    pub fn cell_of(&self, t: f64) -> usize {
        if t >= self.horizon {
            return self.steps;
        }
        let k = (t * self.steps as f64 / self.horizon).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.steps - 1)
        }
    }

    pub fn same_horizon(&self, other: &TimeGrid) -> bool {
        let scale = self.horizon.abs().max(other.horizon.abs());
        (self.horizon - other.horizon).abs() <= 1e-12 * scale
    }

    pub(crate) fn check_horizon(&self, other: &TimeGrid) -> Result<()> {
        if self.same_horizon(other) {
            Ok(())
        } else {
            Err(Error::HorizonMismatch {
                left: self.horizon,
                right: other.horizon,
            })
        }
    }
}

fn check_values(grid: &TimeGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.steps + 1 {
        return Err(Error::LengthMismatch {
            expected: grid.steps + 1,
            actual: values.len(),
        });
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(invalid(format!("path value at index {k} is not finite")));
    }
    Ok(())
}

/// Right-continuous step path: `f(t) = values[floor(nt/T)]` for `t < T` and
/// `f(T) = values[n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl StepPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.steps + 1])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.grid.steps]
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.grid.cell_of(t)]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Continuous piecewise-linear path through `(t_k, values[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl LinearPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.grid.steps]
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.grid.cell_of(t);
        if k == self.grid.steps {
            return self.values[k];
        }
        let w = (t - self.grid.time(k)) / self.grid.dt();
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }
}

/// A point of the merged grid of two uniform grids over the same horizon.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MergedPoint {
    /// Position as a fraction of the horizon.
    pub frac: f64,
    /// Cell of the first grid containing the point (`n` at the horizon).
    pub left: usize,
    /// Cell of the second grid containing the point.
    pub right: usize,
    /// Whether the point is a breakpoint of the first / second grid.
    pub on_left: bool,
    pub on_right: bool,
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Union of the breakpoints of two grids, in increasing order, located on the
/// common denominator `lcm(n1, n2)`.
pub(crate) fn merged_points(n1: usize, n2: usize) -> Vec<MergedPoint> {
    let (a, b) = (n1 as u128, n2 as u128);
    let lcm = a / gcd(a, b) * b;
    let (s1, s2) = (lcm / a, lcm / b);
    let mut out = Vec::with_capacity(n1 + n2 + 1);
    let (mut i, mut j) = (0u128, 0u128);
    while i <= a || j <= b {
        let p1 = if i <= a { i * s1 } else { u128::MAX };
        let p2 = if j <= b { j * s2 } else { u128::MAX };
        let p = p1.min(p2);
        let (on_left, on_right) = (p1 == p, p2 == p);
        out.push(MergedPoint {
            frac: p as f64 / lcm as f64,
            left: (p / s1) as usize,
            right: (p / s2) as usize,
            on_left,
            on_right,
        });
        if on_left {
            i += 1;
        }
        if on_right {
            j += 1;
        }
    }
    out
}

/// Meyer–Zheng distance `∫_0^T min(1, |f-g|) dt + |f(T) - g(T)|`, evaluated
/// exactly on the merged grid.
pub fn mz_distance(f: &StepPath, g: &StepPath) -> Result<f64> {
    f.grid.check_horizon(&g.grid)?;
    let horizon = f.grid.horizon;
    let points = merged_points(f.grid.steps, g.grid.steps);
    let mut integral = 0.0;
    for w in points.windows(2) {
        let (p, q) = (w[0], w[1]);
        let width = (q.frac - p.frac) * horizon;
        let gap = (f.values[p.left] - g.values[p.right]).abs();
        integral += width * gap.min(1.0);
    }
    Ok(integral + (f.terminal() - g.terminal()).abs())
}

/// Sup distance between piecewise-linear paths; exact because the difference
/// is linear between merged breakpoints.
pub fn sup_distance(f: &LinearPath, g: &LinearPath) -> Result<f64> {
    f.grid.check_horizon(&g.grid)?;
    let horizon = f.grid.horizon;
    let points = merged_points(f.grid.steps, g.grid.steps);
    let eval = |path: &LinearPath, on_grid: bool, cell: usize, frac: f64| {
        if on_grid {
            path.values[cell]
        } else {
            path.value_at(frac * horizon)
        }
    };
    Ok(points
        .iter()
        .map(|p| {
            let a = eval(f, p.on_left, p.left, p.frac);
            let b = eval(g, p.on_right, p.right, p.frac);
            (a - b).abs()
        })
        .fold(0.0, f64::max))
}

/// Jordan decomposition `f = pos - neg` of a step path, with the initial jump
/// from `f(0-) = 0` included.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanDecomposition {
    pub positive: StepPath,
    pub negative: StepPath,
    pub total_variation: f64,
}

pub fn jordan_decompose(f: &StepPath) -> JordanDecomposition {
    let n = f.grid.steps;
    let mut pos = Vec::with_capacity(n + 1);
    let mut neg = Vec::with_capacity(n + 1);
    let (mut up, mut down, mut prev) = (0.0, 0.0, 0.0);
    for &v in &f.values {
        let d = v - prev;
        if d > 0.0 {
            up += d;
        } else {
            down -= d;
        }
        pos.push(up);
        neg.push(down);
        prev = v;
    }
    JordanDecomposition {
        positive: StepPath {
            grid: f.grid,
            values: pos,
        },
        negative: StepPath {
            grid: f.grid,
            values: neg,
        },
        total_variation: total_variation(&f.values),
    }
}

/// Total variation `Σ_k |f_k - f_{k-1}|` with `f_{-1} = 0`.
pub fn total_variation(values: &[f64]) -> f64 {
    let mut prev = 0.0;
    values
        .iter()
        .map(|&v| {
            let d = (v - prev).abs();
            prev = v;
            d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n, 1.0).unwrap()
    }

    fn step(n: usize, v: Vec<f64>) -> StepPath {
        StepPath::new(grid(n), v).unwrap()
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(0, 1.0).is_err());
        assert!(TimeGrid::new(3, 0.0).is_err());
        assert!(TimeGrid::new(3, f64::NAN).is_err());
        let g = TimeGrid::new(3, 2.5).unwrap();
        assert_eq!(g.time(3), 2.5);
        assert!(g.time(1) < g.time(2));
    }

    #[test]
    fn step_path_value_lookup() {
        let f = step(2, vec![0.0, 2.0, 5.0]);
        assert_eq!(f.value_at(0.0), 0.0);
        assert_eq!(f.value_at(0.49), 0.0);
        assert_eq!(f.value_at(0.5), 2.0);
        assert_eq!(f.value_at(0.99), 2.0);
        assert_eq!(f.value_at(1.0), 5.0);
        assert!(StepPath::new(grid(2), vec![0.0, 1.0]).is_err());
        assert!(StepPath::new(grid(1), vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn mz_pinned_examples() {
        let f = step(3, vec![0.3, -1.0, 2.0, 0.7]);
        assert_eq!(mz_distance(&f, &f).unwrap(), 0.0);

        let zero = StepPath::constant(grid(1), 0.0).unwrap();
        let half = StepPath::constant(grid(1), 0.5).unwrap();
        assert_abs_diff_eq!(mz_distance(&zero, &half).unwrap(), 1.0, epsilon = 1e-15);

        let jump = step(2, vec![0.0, 2.0, 2.0]);
        assert_abs_diff_eq!(mz_distance(&jump, &zero).unwrap(), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn mz_jump_example_matches_riemann_sum() {
        let jump = step(2, vec![0.0, 2.0, 2.0]);
        let mesh = 1e-4;
        let cells = (1.0 / mesh) as usize;
        let riemann: f64 = (0..cells)
            .map(|i| {
                let t = (i as f64 + 0.5) * mesh;
                mesh * jump.value_at(t).abs().min(1.0)
            })
            .sum::<f64>()
            + 2.0;
        let exact = mz_distance(&jump, &StepPath::constant(grid(7), 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(exact, riemann, epsilon = 1e-9);
    }

    #[test]
    fn mz_rejects_horizon_mismatch() {
        let f = StepPath::constant(grid(2), 0.0).unwrap();
        let g = StepPath::constant(TimeGrid::new(2, 2.0).unwrap(), 0.0).unwrap();
        assert!(matches!(
            mz_distance(&f, &g),
            Err(Error::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn merged_points_cover_both_grids() {
        let pts = merged_points(4, 6);
        // {0, 1/6, 1/4, 1/3, 1/2, 2/3, 3/4, 5/6, 1}
        assert_eq!(pts.len(), 9);
        assert!(pts.windows(2).all(|w| w[0].frac < w[1].frac));
        assert_eq!(pts.last().unwrap().left, 4);
        assert_eq!(pts.last().unwrap().right, 6);
        assert_eq!(pts[2].left, 1);
        assert_eq!(pts[2].right, 1);
    }

    #[test]
    fn sup_distance_examples() {
        let f = LinearPath::new(grid(1), vec![1.0, 1.0]).unwrap();
        let g = LinearPath::new(grid(3), vec![3.0; 4]).unwrap();
        assert_eq!(sup_distance(&f, &f).unwrap(), 0.0);
        assert_abs_diff_eq!(sup_distance(&f, &g).unwrap(), 2.0);
        let ramp = LinearPath::new(grid(1), vec![0.0, 1.0]).unwrap();
        let zero = LinearPath::new(grid(2), vec![0.0; 3]).unwrap();
        assert_abs_diff_eq!(sup_distance(&ramp, &zero).unwrap(), 1.0);
        // Breakpoint of one path falls inside a cell of the other.
        let tent = LinearPath::new(grid(2), vec![0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(sup_distance(&tent, &zero).unwrap(), 1.0);
        assert_abs_diff_eq!(sup_distance(&zero, &tent).unwrap(), 1.0);
    }

    #[test]
    fn linear_path_interpolates() {
        let p = LinearPath::new(grid(2), vec![0.0, 1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(p.value_at(0.25), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.value_at(0.75), 2.0, epsilon = 1e-15);
        assert_eq!(p.value_at(1.0), 3.0);
    }

    #[test]
    fn jordan_examples() {
        let z = jordan_decompose(&StepPath::constant(grid(3), 0.0).unwrap());
        assert_eq!(z.total_variation, 0.0);
        assert!(z.positive.values().iter().all(|&v| v == 0.0));

        let j = jordan_decompose(&step(2, vec![1.0, 1.0, 0.0]));
        assert_eq!(j.positive.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(j.negative.values(), &[0.0, 0.0, 1.0]);
        assert_eq!(j.total_variation, 2.0);

        let j = jordan_decompose(&step(2, vec![2.0, -1.0, 0.0]));
        assert_eq!(j.positive.values(), &[2.0, 2.0, 3.0]);
        assert_eq!(j.negative.values(), &[0.0, 3.0, 3.0]);
        assert_eq!(j.total_variation, 6.0);
    }

    fn path_strategy(max_n: usize) -> impl Strategy<Value = StepPath> {
        (1..=max_n).prop_flat_map(|n| {
            prop::collection::vec(-3.0..3.0f64, n + 1).prop_map(move |v| step(n, v))
        })
    }

    proptest! {
        #[test]
        fn mz_symmetric_and_bounded(f in path_strategy(12), g in path_strategy(12)) {
            let d = mz_distance(&f, &g).unwrap();
            prop_assert_eq!(d, mz_distance(&g, &f).unwrap());
            prop_assert!(d >= 0.0);
            prop_assert!(d <= 1.0 + (f.terminal() - g.terminal()).abs() + 1e-12);
        }

        #[test]
        fn mz_refinement_invariant(f in path_strategy(8), g in path_strategy(8), r in 2usize..4) {
            let refine = |p: &StepPath| {
                let n = p.grid().steps();
                let v: Vec<f64> = (0..=n * r).map(|k| p.values()[k / r]).collect();
                step(n * r, v)
            };
            let d = mz_distance(&f, &g).unwrap();
            let dr = mz_distance(&refine(&f), &refine(&g)).unwrap();
            prop_assert!((d - dr).abs() <= 1e-12);
        }

        #[test]
        fn jordan_reconstructs(f in path_strategy(20)) {
            let j = jordan_decompose(&f);
            for k in 0..f.values().len() {
                let rebuilt = j.positive.values()[k] - j.negative.values()[k];
                prop_assert!((rebuilt - f.values()[k]).abs() <= 1e-12 * (1.0 + j.total_variation));
            }
            prop_assert!(j.positive.values().windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(j.negative.values().windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(j.total_variation, total_variation(f.values()));
            let ends = j.positive.terminal() + j.negative.terminal();
            prop_assert!((ends - j.total_variation).abs() <= 1e-12 * (1.0 + ends));
        }
    }
}
