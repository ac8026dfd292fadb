use tclab::diagnostics::law_distance;
use tclab::market::{build_market, sample_scenarios, simulate_limit, LimitModelParams, PriceTree};
use tclab::solver::{dp_value, SolverConfig};
use tclab::utility::UtilitySpec;

const K1: UtilitySpec = UtilitySpec::Shortfall { strike: 1.0 };

fn tree_terminals(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_scenarios(n, count, seed)
        .unwrap()
        .iter()
        .map(|xi| {
            let m = build_market(n, 1.0, xi).unwrap();
            vec![m.terminal_price()]
        })
        .collect()
}

#[test]
fn law_distance_trend() {
    let limit: Vec<Vec<f64>> = simulate_limit(&LimitModelParams::new(1.0, 2000, 17), 1500)
        .unwrap()
        .iter()
        .map(|p| vec![p.terminal().1])
        .collect();
    let stats: Vec<(f64, f64)> = [16usize, 64, 256]
        .iter()
        .map(|&n| {
            let d = law_distance(&tree_terminals(n, 1500, 5), &limit).unwrap();
            (d.ks[0], d.energy)
        })
        .collect();
    assert!(stats.windows(2).all(|w| w[1].1 < w[0].1), "{stats:?}");
    assert!(stats[2].0 < stats[0].0, "{stats:?}");
}

/// Largest second difference of `u_n` on an even grid of capitals.
fn convexity_excess(n: usize, step: f64, cost: f64) -> (Vec<f64>, f64) {
    let tree = PriceTree::capped(n, 1.0).unwrap();
    let cfg = SolverConfig {
        holding_step: step,
        holding_bound: Some(1.0),
        cost_step: cost,
        extract_policy: false,
        ..SolverConfig::default()
    };
    let u: Vec<f64> = (1..=8)
        .map(|i| dp_value(&tree, &K1, 0.05 * i as f64, 0.05, &cfg).unwrap().value)
        .collect();
    let excess = u
        .windows(3)
        .map(|w| (w[2] - w[1]) - (w[1] - w[0]))
        .fold(f64::MIN, f64::max);
    (u, excess)
}

#[test]
fn value_is_nondecreasing_and_concave_up_to_the_grid() {
    let (coarse, e1) = convexity_excess(2, 0.01, 1e-4);
    let (fine, e2) = convexity_excess(2, 0.0025, 2e-5);
    for u in [&coarse, &fine] {
        assert!(u.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{u:?}");
    }
    // Grid strategies are not a convex set, so concavity only holds in the
    // limit of a fine holding grid.
    assert!(e2 < 0.5 * e1, "{e1} {e2}");
    assert!(e2 < 0.0025);
}

#[test]
fn value_dominates_no_trade_and_falls_with_friction() {
    let cfg = SolverConfig::default();
    for n in [2usize, 4] {
        let tree = PriceTree::capped(n, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for kappa in [0.025, 0.05, 0.1] {
            let fixed = SolverConfig {
                holding_bound: Some(1.0),
                ..cfg.clone()
            };
            let r = dp_value(&tree, &K1, 0.1, kappa, &fixed).unwrap();
            assert!(r.value >= r.no_trade_value);
            assert!(r.value <= last + 1e-12);
            last = r.value;
        }
    }
}
