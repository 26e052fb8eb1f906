//! Greedy hill climbing over single-edge moves, scored by decomposable BIC.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bayesnet::{local_bic, Dag};
use crate::dataset::BinaryData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcConfig {
    pub max_indegree: Option<usize>,
    /// Moves must improve the score by more than this.
    pub min_improvement: f64,
    pub max_moves: usize,
}

impl Default for HcConfig {
    fn default() -> Self {
        Self {
            max_indegree: None,
            min_improvement: 1e-9,
            max_moves: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Move {
    Add,
    Delete,
    Reverse,
}

#[derive(Clone, Debug)]
pub struct HcResult {
    pub dag: Dag,
    /// Total BIC after each accepted move, starting with the empty graph.
    pub score_trace: Vec<f64>,
}

const TIE_TOL: f64 = 1e-9;

struct ScoreCache<'a> {
    data: &'a BinaryData,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl ScoreCache<'_> {
    fn local(&mut self, child: usize, parents: &[usize]) -> f64 {
        let data = self.data;
        *self
            .cache
            .entry((child, parents.to_vec()))
            .or_insert_with(|| local_bic(data, child, parents))
    }

    fn local_with(&mut self, child: usize, parents: &[usize], extra: usize) -> f64 {
        let mut p = parents.to_vec();
        let pos = p.binary_search(&extra).unwrap_or_else(|e| e);
        p.insert(pos, extra);
        self.local(child, &p)
    }

    fn local_without(&mut self, child: usize, parents: &[usize], gone: usize) -> f64 {
        let p: Vec<usize> = parents.iter().copied().filter(|&x| x != gone).collect();
        self.local(child, &p)
    }
}

/// Starts from the empty graph; each step applies the best-scoring legal
/// add/delete/reverse move, ties going to the first move in (from, to, kind)
/// order. Stops at a local optimum.
pub fn hc_learn(data: &BinaryData, cfg: &HcConfig) -> HcResult {
    let d = data.n_cols();
    let mut g = Dag::empty(data.labels().to_vec()).expect("labels already validated");
    let mut scores = ScoreCache {
        data,
        cache: HashMap::new(),
    };
    let mut current: Vec<f64> = (0..d).map(|v| scores.local(v, &[])).collect();
    let mut trace = vec![current.iter().sum()];
    let max_in = cfg.max_indegree.unwrap_or(usize::MAX);

    for _ in 0..cfg.max_moves {
        let mut best: Option<(f64, usize, usize, Move)> = None;
        let mut consider = |delta: f64, u: usize, v: usize, m: Move| {
            // score-equivalent moves differ only by rounding; keep the earlier one
            if delta > cfg.min_improvement && best.is_none_or(|(b, ..)| delta > b + TIE_TOL * b.abs().max(1.0)) {
                best = Some((delta, u, v, m));
            }
        };
        for u in 0..d {
            for v in 0..d {
                if u == v {
                    continue;
                }
                if g.has_edge(u, v) {
                    let pv = g.parents(v).to_vec();
                    let del = scores.local_without(v, &pv, u) - current[v];
                    consider(del, u, v, Move::Delete);
                    if g.parents(u).len() < max_in {
                        g.remove_edge(u, v);
                        let legal = !g.has_path(u, v);
                        g.add_edge(u, v).expect("restoring an existing edge");
                        if legal {
                            let pu = g.parents(u).to_vec();
                            let rev = del + scores.local_with(u, &pu, v) - current[u];
                            consider(rev, u, v, Move::Reverse);
                        }
                    }
                } else if !g.has_edge(v, u) && g.parents(v).len() < max_in && !g.has_path(v, u) {
                    let pv = g.parents(v).to_vec();
                    let add = scores.local_with(v, &pv, u) - current[v];
                    consider(add, u, v, Move::Add);
                }
            }
        }
        let Some((_, u, v, m)) = best else { break };
        match m {
            Move::Add => g.add_edge(u, v).expect("legality checked"),
            Move::Delete => {
                g.remove_edge(u, v);
            }
            Move::Reverse => {
                g.remove_edge(u, v);
                g.add_edge(v, u).expect("legality checked");
            }
        }
        for node in [u, v] {
            let p = g.parents(node).to_vec();
            current[node] = scores.local(node, &p);
        }
        trace.push(current.iter().sum());
    }
    HcResult { dag: g, score_trace: trace }
}
