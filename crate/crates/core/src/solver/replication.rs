//! Frictionless replication on a binary price tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::PriceTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    /// Initial capital of the replicating portfolio.
    pub price: f64,
    /// `E[payoff(S_n)]` under the tree measure.
    pub expectation: f64,
    /// `hedge[k][j]`: shares held from level `k` to `k + 1` at node `j`.
    pub hedge: Vec<Vec<f64>>,
    /// Portfolio value at every node.
    pub values: Vec<Vec<f64>>,
}

/// Solves the two-state replication problem at every node, from the leaves
/// back to the root.
pub fn frictionless_replication_price<F>(tree: &PriceTree, payoff: F) -> Result<Replication>
where
    F: Fn(f64) -> f64,
{
    let n = tree.n();
    let leaves: Vec<f64> = tree.terminal_prices().iter().map(|&s| payoff(s)).collect();
    let expectation = leaves.iter().sum::<f64>() * tree.scenario_probability();
    let mut values = vec![Vec::new(); n + 1];
    let mut hedge = vec![Vec::new(); n];
    values[n] = leaves;
    for k in (0..n).rev() {
        let next = &values[k + 1];
        let mut vk = Vec::with_capacity(1 << k);
        let mut hk = Vec::with_capacity(1 << k);
        for j in 0..1usize << k {
            let (sd, su) = (tree.price(k + 1, 2 * j), tree.price(k + 1, 2 * j + 1));
            if (su - sd).abs() <= 1e-14 * su.abs().max(sd.abs()) {
                return Err(Error::IncompleteMarket { level: k, node: j });
            }
            let (vd, vu) = (next[2 * j], next[2 * j + 1]);
            let delta = (vu - vd) / (su - sd);
            let cash = vu - delta * su;
            vk.push(cash + delta * tree.price(k, j));
            hk.push(delta);
        }
        values[k] = vk;
        hedge[k] = hk;
    }
    Ok(Replication {
        price: values[0][0],
        expectation,
        hedge,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_payoff() {
        let tree = PriceTree::capped(3, 1.0).unwrap();
        let r = frictionless_replication_price(&tree, |_| 2.5).unwrap();
        assert_abs_diff_eq!(r.price, 2.5, epsilon = 1e-14);
        assert!(r.hedge.iter().flatten().all(|h| h.abs() < 1e-12));
    }

    #[test]
    fn call_pin() {
        let tree = PriceTree::capped(2, 1.0).unwrap();
        let r = frictionless_replication_price(&tree, |s| (s - 1.0).max(0.0)).unwrap();
        assert_abs_diff_eq!(r.price, 0.30511, epsilon = 1e-4);
        assert_abs_diff_eq!(r.price, r.expectation, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_node() {
        let tree = PriceTree::capped(1, 1.0).unwrap();
        assert_eq!(
            frictionless_replication_price(&tree, |s| s).unwrap_err(),
            Error::IncompleteMarket { level: 0, node: 0 }
        );
    }

    #[test]
    fn hedge_replicates() {
        let tree = PriceTree::capped(4, 1.0).unwrap();
        let f = |s: f64| (1.2 - s).max(0.0);
        let r = frictionless_replication_price(&tree, f).unwrap();
        for k in 0..4 {
            for j in 0..1usize << k {
                for b in 0..2 {
                    let c = 2 * j + b;
                    let v = r.values[k][j] + r.hedge[k][j] * (tree.price(k + 1, c) - tree.price(k, j));
                    assert_abs_diff_eq!(v, r.values[k + 1][c], epsilon = 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn linear_in_payoff(a in -2.0..2.0f64, b in -2.0..2.0f64, k in 0.5..1.5f64) {
            let tree = PriceTree::capped(5, 1.0).unwrap();
            let f = |s: f64| (s - k).max(0.0);
            let g = |s: f64| s * s;
            let rf = frictionless_replication_price(&tree, f).unwrap().price;
            let rg = frictionless_replication_price(&tree, g).unwrap().price;
            let rc = frictionless_replication_price(&tree, |s| a * f(s) + b * g(s)).unwrap().price;
            prop_assert!((rc - (a * rf + b * rg)).abs() <= 1e-12 * (1.0 + rc.abs()));
        }
    }
}
