//! Backward induction over (node, holding, cost index).
//!
//! A state after trading at a node is the holding index `h` and the cost
//! index `j`, meaning that at most `j·c` has been paid for the trades so far.
//! The cost of a trade at price `S` from `h` to `h'` is rounded up to
//! `⌈(S(h'-h)δ + κS|h'-h|δ)/c⌉` grid steps, so a cost index never
//! underestimates the true cost and every state the program treats as
//! admissible is admissible.
//!
//! For each (node, h) only a window of cost indices is kept. The top of the
//! window is the admissibility limit `x + hδS - κ|h|δS - jc ≥ 0`. Below the
//! window the liquidation value exceeds a cap, namely the smaller of the
//! largest payoff in the subtree (for utilities that saturate there) and the
//! largest wealth reachable along the path; such states are evaluated as if
//! they were at the bottom of the window, which by monotonicity in `j` can
//! only lower the value.

use rayon::join;

use super::{
    check_problem, evaluate_policy, no_trade_value, resolve_holdings, GridInfo, HoldingGrid,
    ScenarioPolicy, SolverConfig, SolverKind, ValueReport,
};
use crate::error::{invalid, Error, Result};
use crate::market::PriceTree;
use crate::utility::UtilitySpec;

const NO_CHOICE: u16 = u16::MAX;

struct Row {
    lo: i64,
    vals: Vec<f64>,
}

impl Row {
    fn empty() -> Self {
        Self {
            lo: 0,
            vals: Vec::new(),
        }
    }

    fn hi(&self) -> i64 {
        self.lo + self.vals.len() as i64 - 1
    }
}

struct Table {
    rows: Vec<Row>,
}

/// Decision rule at a node: the chosen holding index as a function of the
/// parent's (h, cost-window position).
struct Choice {
    level: usize,
    node: usize,
    rows: Vec<(i64, Vec<u16>)>,
}

struct Output {
    table: Table,
    choices: Vec<Choice>,
    states: u64,
}

struct Ctx<'a> {
    tree: &'a PriceTree,
    u: UtilitySpec,
    x: f64,
    kappa: f64,
    hold: HoldingGrid,
    c: f64,
    cost_cap: Option<i64>,
    sat: Vec<Vec<f64>>,
    reach: Vec<Vec<f64>>,
    order: Vec<usize>,
    extract: bool,
}

impl<'a> Ctx<'a> {
    fn new(
        tree: &'a PriceTree,
        u: &UtilitySpec,
        x: f64,
        kappa: f64,
        config: &SolverConfig,
        extract: bool,
    ) -> Result<Self> {
        check_problem(x, kappa)?;
        let c = config.cost_step;
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("cost step must be positive, got {c}")));
        }
        let cost_cap = match config.cost_cap {
            Some(cap) if cap >= x => Some((cap / c).floor() as i64),
            Some(cap) => return Err(invalid(format!("cost cap {cap} is below the capital {x}"))),
            None => None,
        };
        let hold = resolve_holdings(config, tree, x, kappa)?;
        let n = tree.n();
        let mut sat = vec![Vec::new(); n + 1];
        sat[n] = tree
            .terminal_prices()
            .iter()
            .map(|&s| u.saturation(s).unwrap_or(f64::INFINITY))
            .collect();
        for k in (0..n).rev() {
            sat[k] = (0..1usize << k)
                .map(|j| sat[k + 1][2 * j].max(sat[k + 1][2 * j + 1]))
                .collect();
        }
        let gamma = hold.bound();
        let mut reach = vec![vec![x]];
        for k in 1..=n {
            let prev = &reach[k - 1];
            reach.push(
                (0..1usize << k)
                    .map(|j| {
                        let dp = (tree.price(k, j) - tree.price(k - 1, j / 2)).abs();
                        prev[j / 2] + gamma * dp
                    })
                    .collect(),
            );
        }
        Ok(Self {
            tree,
            u: *u,
            x,
            kappa,
            hold,
            c,
            cost_cap,
            sat,
            reach,
            order: hold.tie_order(),
            extract,
        })
    }

    fn n(&self) -> usize {
        self.tree.n()
    }

    /// Cost-index window `[lo, hi]` for holding index `i` at a node.
    fn window(&self, level: usize, node: usize, i: usize) -> (i64, i64) {
        let s = self.tree.price(level, node);
        let h = self.hold.value(i);
        let a = self.x + h * s - self.kappa * h.abs() * s;
        let mut hi = (a / self.c).floor() as i64;
        if let Some(cap) = self.cost_cap {
            hi = hi.min(cap);
        }
        let lcap = self.sat[level][node].min(self.reach[level][node]);
        let lo = (((a - lcap) / self.c).floor() as i64).min(hi);
        (lo, hi)
    }

    /// Rounded-up cost indices of trades at price `s`, indexed by `d + count - 1`
    /// for a change of `d` grid steps.
    fn offsets(&self, s: f64) -> Vec<i64> {
        let m = self.hold.count() as i64 - 1;
        (-m..=m)
            .map(|d| {
                let q = d as f64 * self.hold.step;
                ((s * q + self.kappa * s * q.abs()) / self.c).ceil() as i64
            })
            .collect()
    }

    fn leaf(&self, node: usize) -> Output {
        let n = self.n();
        let s = self.tree.price(n, node);
        let mut rows: Vec<Row> = (0..self.hold.count()).map(|_| Row::empty()).collect();
        let (lo, hi) = self.window(n, node, self.hold.half);
        let vals: Vec<f64> = (lo..=hi)
            .map(|j| self.u.eval_unchecked((self.x - j as f64 * self.c).max(0.0), s))
            .collect();
        let states = vals.len() as u64;
        rows[self.hold.half] = Row { lo, vals };
        Output {
            table: Table { rows },
            choices: Vec::new(),
            states,
        }
    }

    /// Table at an internal node. `start` restricts the root to the single
    /// cost index reached by the initial trade.
    fn node(&self, level: usize, node: usize, start: Option<&[i64]>) -> Result<Output> {
        let n = self.n();
        if level == n {
            return Ok(self.leaf(node));
        }
        let kids = [2 * node, 2 * node + 1];
        let (a, b) = if n - level > 3 {
            join(|| self.node(level + 1, kids[0], None), || self.node(level + 1, kids[1], None))
        } else {
            (self.node(level + 1, kids[0], None), self.node(level + 1, kids[1], None))
        };
        let children = [a?, b?];
        let offs = [
            self.offsets(self.tree.price(level + 1, kids[0])),
            self.offsets(self.tree.price(level + 1, kids[1])),
        ];
        let count = self.hold.count();
        let mut rows = Vec::with_capacity(count);
        let mut choice_rows: [Vec<(i64, Vec<u16>)>; 2] = [Vec::new(), Vec::new()];
        let mut states = children[0].states + children[1].states;
        for i in 0..count {
            let (mut lo, hi) = self.window(level, node, i);
            if let Some(start) = start {
                let j0 = start[i];
                if j0 > hi {
                    rows.push(Row::empty());
                    for r in choice_rows.iter_mut() {
                        r.push((0, Vec::new()));
                    }
                    continue;
                }
                lo = j0.max(lo);
                let row = self.row(lo, 1, i, &children, &offs, &mut choice_rows);
                rows.push(row);
                states += 1;
                continue;
            }
            let len = (hi - lo + 1) as usize;
            let row = self.row(lo, len, i, &children, &offs, &mut choice_rows);
            states += len as u64;
            rows.push(row);
        }
        let mut choices: Vec<Choice> = Vec::new();
        if self.extract {
            let [c0, c1] = children;
            choices.extend(c0.choices);
            choices.extend(c1.choices);
            let [r0, r1] = choice_rows;
            choices.push(Choice {
                level: level + 1,
                node: kids[0],
                rows: r0,
            });
            choices.push(Choice {
                level: level + 1,
                node: kids[1],
                rows: r1,
            });
        }
        Ok(Output {
            table: Table { rows },
            choices,
            states,
        })
    }

    fn row(
        &self,
        lo: i64,
        len: usize,
        i: usize,
        children: &[Output; 2],
        offs: &[Vec<i64>; 2],
        choice_rows: &mut [Vec<(i64, Vec<u16>)>; 2],
    ) -> Row {
        let count = self.hold.count();
        let mut acc = vec![0.0f64; len];
        let mut buf = vec![f64::NEG_INFINITY; len];
        for b in 0..2 {
            buf.fill(f64::NEG_INFINITY);
            let mut pick = if self.extract {
                vec![NO_CHOICE; len]
            } else {
                Vec::new()
            };
            for &ip in &self.order {
                let next = &children[b].table.rows[ip];
                if next.vals.is_empty() {
                    continue;
                }
                let base = lo + offs[b][ip + count - 1 - i];
                let ia = (next.lo - base).clamp(0, len as i64) as usize;
                let ib = (next.hi() - base + 1).clamp(0, len as i64) as usize;
                let first = next.vals[0];
                if self.extract {
                    for idx in 0..ia {
                        if first > buf[idx] {
                            buf[idx] = first;
                            pick[idx] = ip as u16;
                        }
                    }
                    if ib > ia {
                        let src = &next.vals[(base + ia as i64 - next.lo) as usize..];
                        for (idx, &v) in (ia..ib).zip(src) {
                            if v > buf[idx] {
                                buf[idx] = v;
                                pick[idx] = ip as u16;
                            }
                        }
                    }
                } else {
                    for slot in &mut buf[..ia] {
                        *slot = if first > *slot { first } else { *slot };
                    }
                    if ib > ia {
                        let src = &next.vals[(base + ia as i64 - next.lo) as usize..];
                        for (slot, &v) in buf[ia..ib].iter_mut().zip(src) {
                            *slot = if v > *slot { v } else { *slot };
                        }
                    }
                }
            }
            for (a, &v) in acc.iter_mut().zip(&buf) {
                *a += 0.5 * v;
            }
            if self.extract {
                choice_rows[b].push((lo, pick));
            }
        }
        Row { lo, vals: acc }
    }

    fn root_start(&self) -> Vec<i64> {
        let offs = self.offsets(self.tree.price(0, 0));
        let base = self.hold.count() - 1 - self.hold.half;
        (0..self.hold.count()).map(|i| offs[i + base]).collect()
    }

    fn forward(&self, root: &Table, choices: Vec<Choice>) -> Result<Vec<ScenarioPolicy>> {
        let n = self.n();
        let mut by_node: Vec<Vec<Option<Choice>>> =
            (0..=n).map(|k| (0..1usize << k).map(|_| None).collect()).collect();
        for ch in choices {
            let (l, nd) = (ch.level, ch.node);
            by_node[l][nd] = Some(ch);
        }
        let mut best = None;
        for &i in &self.order {
            if let Some(&v) = root.rows[i].vals.first() {
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, i));
                }
            }
        }
        let (_, i0) = best.ok_or_else(|| Error::Precondition("no admissible initial trade".into()))?;
        let start = self.root_start();
        let mut out = Vec::with_capacity(self.tree.scenario_count());
        for id in 0..self.tree.scenario_count() {
            let mut holdings = Vec::with_capacity(n + 1);
            let (mut i, mut j) = (i0, start[i0]);
            holdings.push(self.hold.value(i));
            for k in 0..n {
                let parent = self.tree.node_of(id, k);
                let child = self.tree.node_of(id, k + 1);
                let ch = by_node[k + 1][child]
                    .as_ref()
                    .ok_or_else(|| Error::Precondition(format!("missing decision at level {}", k + 1)))?;
                let (lo, picks) = &ch.rows[i];
                let idx = (j.max(*lo) - lo) as usize;
                let ip = picks.get(idx).copied().unwrap_or(NO_CHOICE);
                if ip == NO_CHOICE {
                    return Err(Error::Precondition(format!(
                        "policy has no feasible move at level {} node {parent}",
                        k + 1
                    )));
                }
                let ip = ip as usize;
                let offs = self.offsets(self.tree.price(k + 1, child));
                j = j.max(*lo) + offs[ip + self.hold.count() - 1 - i];
                i = ip;
                holdings.push(if k + 1 == n { 0.0 } else { self.hold.value(i) });
            }
            out.push(ScenarioPolicy {
                scenario: id,
                holdings,
            });
        }
        Ok(out)
    }
}

/// Number of states and transition evaluations of [`dp_value`].
pub fn estimate_dp_work(
    tree: &PriceTree,
    u: &UtilitySpec,
    x: f64,
    kappa: f64,
    config: &SolverConfig,
) -> Result<(u64, u64)> {
    let ctx = Ctx::new(tree, u, x, kappa, config, false)?;
    let n = tree.n();
    let count = ctx.hold.count();
    let (mut states, mut work) = (0u64, 0u64);
    for k in 0..=n {
        let fan = if k + 1 == n { 1 } else { count as u64 };
        for node in 0..1usize << k {
            if k == n {
                let (lo, hi) = ctx.window(k, node, ctx.hold.half);
                states += (hi - lo + 1) as u64;
                continue;
            }
            for i in 0..count {
                let (lo, hi) = ctx.window(k, node, i);
                let len = if k == 0 { 1 } else { (hi - lo + 1) as u64 };
                states += len;
                work = work.saturating_add(2 * len * fan);
            }
        }
    }
    Ok((states, work))
}

pub fn dp_value(
    tree: &PriceTree,
    u: &UtilitySpec,
    x: f64,
    kappa: f64,
    config: &SolverConfig,
) -> Result<ValueReport> {
    let n = tree.n();
    let extract = config.extract_policy && n <= config.policy_max_n;
    let (_, work) = estimate_dp_work(tree, u, x, kappa, config)?;
    if work > config.max_work {
        return Err(Error::ResourceLimit(format!(
            "dynamic program needs about {work} transitions, above the limit {}",
            config.max_work
        )));
    }
    let ctx = Ctx::new(tree, u, x, kappa, config, extract)?;
    let start = ctx.root_start();
    let out = ctx.node(0, 0, Some(&start))?;
    let mut value = f64::NEG_INFINITY;
    for &i in &ctx.order {
        if let Some(&v) = out.table.rows[i].vals.first() {
            value = value.max(v);
        }
    }
    let no_trade = no_trade_value(tree, u, x);
    let mut warnings = Vec::new();
    if config.extract_policy && !extract {
        warnings.push(format!(
            "policy not extracted for n = {n} (limit {})",
            config.policy_max_n
        ));
    }
    if value < no_trade - 1e-12 * (1.0 + no_trade.abs()) {
        warnings.push("cost grid exhausted; reporting the no-trade value".into());
        value = no_trade;
    }
    let (policy, policy_value, policy_volume) = if extract {
        let policy = ctx.forward(&out.table, out.choices)?;
        let (pv, vol) = evaluate_policy(tree, u, x, kappa, &policy)?;
        (Some(policy), Some(pv), Some(vol))
    } else {
        (None, None, None)
    };
    Ok(ValueReport {
        n,
        x,
        kappa,
        utility: *u,
        solver: SolverKind::Dp,
        value,
        policy_value,
        no_trade_value: no_trade,
        lower_bound: true,
        grid: GridInfo {
            holding_step: ctx.hold.step,
            holding_bound: ctx.hold.bound(),
            holding_points: ctx.hold.count(),
            cost_step: Some(ctx.c),
            cost_cap: config.cost_cap,
        },
        states_visited: out.states,
        policy_volume,
        policy,
        warnings,
    })
}
