use super::{preference, ratio_objective, RATIO_TOLERANCE};
use crate::catalog::{EvalState, GainEvaluator};
use crate::number::{to_f64, Rational};
use num_traits::Signed;
use rayon::prelude::*;
use std::cmp::Ordering as CmpOrdering;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone)]
pub(crate) struct Cand {
    pub subset: Vec<usize>,
    pub gain: Rational,
    pub cost: Rational,
    pub objective: f64,
}

pub(crate) enum Mode {
    Budget {
        xi: Rational,
    },
    Ratio {
        gamma: f64,
        base: Rational,
    },
    /// Record every feasible subset, no pruning.
    All,
}

/// Slack added to float bounds before pruning, so rounding never discards a
/// subtree whose exact bound reaches the incumbent.
fn slack(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

struct Node {
    subset: Vec<usize>,
    mask: u64,
    next: usize,
}

#[derive(Default)]
struct Local {
    best: Option<Cand>,
    pool: Vec<Cand>,
}

pub(crate) struct Search<'a> {
    eval: &'a GainEvaluator,
    adj: &'a [u64],
    mode: Mode,
    cost_f: Vec<f64>,
    opt_f: Vec<f64>,
    base_f: f64,
    incumbent: AtomicU64,
}

impl<'a> Search<'a> {
    pub fn new(eval: &'a GainEvaluator, adj: &'a [u64], mode: Mode) -> Self {
        let n = adj.len();
        let base_f = match &mode {
            Mode::Ratio { base, .. } => to_f64(base),
            _ => 0.0,
        };
        Self {
            cost_f: (0..n).map(|i| to_f64(eval.cost(i))).collect(),
            opt_f: (0..n).map(|i| to_f64(eval.optimistic_gain(i))).collect(),
            eval,
            adj,
            mode,
            base_f,
            incumbent: AtomicU64::new(f64::NEG_INFINITY.to_bits()),
        }
    }

    fn incumbent(&self) -> f64 {
        f64::from_bits(self.incumbent.load(Ordering::Relaxed))
    }

    fn raise(&self, value: f64) {
        let mut cur = self.incumbent.load(Ordering::Relaxed);
        while value > f64::from_bits(cur) {
            match self.incumbent.compare_exchange_weak(
                cur,
                value.to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(actual) => cur = actual,
            }
        }
    }

    /// Branch-and-bound. Returns a candidate set that contains the optimum;
    /// the caller applies the final deterministic selection.
    pub fn run(&self) -> Vec<Cand> {
        let target = 4 * rayon::current_num_threads();
        let mut root = Local::default();
        let mut frontier = vec![Node {
            subset: Vec::new(),
            mask: 0,
            next: 0,
        }];
        for _ in 0..4 {
            if frontier.len() >= target {
                break;
            }
            let mut next = Vec::new();
            let mut grew = false;
            for node in frontier {
                let st = self.replay(&node.subset);
                self.visit(&mut root, &st, &node.subset);
                let children = self.children(&st, node.mask, node.next);
                if children.is_empty() || self.prunes(&st, &node.subset, &children) {
                    continue;
                }
                grew = true;
                for j in children {
                    let mut subset = node.subset.clone();
                    subset.push(j);
                    next.push(Node {
                        subset,
                        mask: node.mask | (1 << j),
                        next: j + 1,
                    });
                }
            }
            frontier = next;
            if !grew {
                break;
            }
        }

        let locals: Vec<Local> = frontier
            .into_par_iter()
            .map(|node| {
                let mut local = Local::default();
                let mut st = self.replay(&node.subset);
                let mut subset = node.subset;
                self.dfs(&mut local, &mut st, &mut subset, node.mask, node.next);
                local
            })
            .collect();

        let mut out = Vec::new();
        for local in std::iter::once(root).chain(locals) {
            out.extend(local.best);
            out.extend(local.pool);
        }
        out
    }

    /// Every feasible subset including the empty one, sequentially.
    pub fn run_exhaustive(&self) -> Vec<Cand> {
        let mut local = Local::default();
        let mut st = self.eval.state();
        self.dfs(&mut local, &mut st, &mut Vec::new(), 0, 0);
        local.pool
    }

    fn replay(&self, subset: &[usize]) -> EvalState<'a> {
        let mut st = self.eval.state();
        for &i in subset {
            st.push(i);
        }
        st
    }

    fn dfs(
        &self,
        local: &mut Local,
        st: &mut EvalState<'_>,
        subset: &mut Vec<usize>,
        mask: u64,
        next: usize,
    ) {
        self.visit(local, st, subset);
        let children = self.children(st, mask, next);
        if children.is_empty() || self.prunes(st, subset, &children) {
            return;
        }
        for j in children {
            st.push(j);
            subset.push(j);
            self.dfs(local, st, subset, mask | (1 << j), j + 1);
            subset.pop();
            st.pop(j);
        }
    }

    /// Positions after `next` that conflict with nothing chosen and, in
    /// budget mode, still fit.
    fn children(&self, st: &EvalState<'_>, mask: u64, next: usize) -> Vec<usize> {
        (next..self.adj.len())
            .filter(|&j| self.adj[j] & mask == 0)
            .filter(|&j| match &self.mode {
                Mode::Budget { xi, .. } => &(st.cost() + self.eval.cost(j)) <= xi,
                _ => true,
            })
            .collect()
    }

    fn prunes(&self, st: &EvalState<'_>, subset: &[usize], children: &[usize]) -> bool {
        let best = self.incumbent();
        if best == f64::NEG_INFINITY {
            return false;
        }
        let optimistic: f64 = children.iter().map(|&j| self.opt_f[j]).sum();
        let gain = to_f64(st.gain());
        match &self.mode {
            Mode::All => false,
            Mode::Budget { .. } => {
                let bound = gain + optimistic;
                bound + slack(bound) < best
            }
            Mode::Ratio { gamma, .. } => {
                let q = (self.base_f + gain + optimistic).max(0.0);
                let cost = if subset.is_empty() {
                    children
                        .iter()
                        .map(|&j| self.cost_f[j])
                        .fold(f64::INFINITY, f64::min)
                } else {
                    to_f64(st.cost())
                };
                let bound = q.powf(*gamma) / cost;
                bound + slack(bound) < best - RATIO_TOLERANCE
            }
        }
    }

    fn visit(&self, local: &mut Local, st: &EvalState<'_>, subset: &[usize]) {
        match &self.mode {
            Mode::All => local.pool.push(Cand {
                subset: subset.to_vec(),
                gain: st.gain().clone(),
                cost: st.cost().clone(),
                objective: f64::NAN,
            }),
            Mode::Budget { xi } => {
                debug_assert!(st.cost() <= xi);
                if let Some(b) = &local.best {
                    if st.gain() < &b.gain {
                        return;
                    }
                }
                let cand = Cand {
                    subset: subset.to_vec(),
                    gain: st.gain().clone(),
                    cost: st.cost().clone(),
                    objective: to_f64(st.gain()),
                };
                let better = match &local.best {
                    None => true,
                    Some(b) => preference(&cand, b) == CmpOrdering::Less,
                };
                if better {
                    self.raise(cand.objective);
                    local.best = Some(cand);
                }
            }
            Mode::Ratio { gamma, base } => {
                if subset.is_empty() {
                    return;
                }
                let q = base + st.gain();
                if q.is_negative() {
                    return;
                }
                let objective = ratio_objective(&q, st.cost(), *gamma);
                let best = self.incumbent();
                if objective < best - RATIO_TOLERANCE {
                    return;
                }
                self.raise(objective);
                local.pool.push(Cand {
                    subset: subset.to_vec(),
                    gain: st.gain().clone(),
                    cost: st.cost().clone(),
                    objective,
                });
                if local.pool.len() > 256 {
                    let floor = self.incumbent() - RATIO_TOLERANCE;
                    local.pool.retain(|c| c.objective >= floor);
                }
            }
        }
    }
}
