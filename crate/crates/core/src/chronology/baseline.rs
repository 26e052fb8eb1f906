//! Frequency-rule chronology: pairwise Fisher tests, multiple-testing
//! correction, and orientation by which event is seen alone more often.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ChronologyError;
use crate::bayesnet::Dag;
use crate::dataset::{contingency, EventMatrix};
use crate::discovery::{adjust_p_values, fisher_exact, Correction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    /// #(a = 1, b = 0).
    pub n10: u64,
    /// #(a = 0, b = 1).
    pub n01: u64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub dependent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovedEdge {
    pub from: String,
    pub to: String,
    pub margin: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineChronology {
    /// Events, or `+`-joined simultaneity groups.
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub simultaneity_groups: Vec<Vec<String>>,
    pub tests: Vec<PairTest>,
    pub removed_for_cycles: Vec<RemovedEdge>,
}

impl BaselineChronology {
    pub fn graph(&self) -> Dag {
        Dag::new(self.nodes.clone(), &self.edges).expect("baseline graph is acyclic")
    }
}

fn find(parent: &mut [usize], v: usize) -> usize {
    let mut r = v;
    while parent[r] != r {
        r = parent[r];
    }
    let mut v = v;
    while parent[v] != r {
        let next = parent[v];
        parent[v] = r;
        v = next;
    }
    r
}

/// A directed cycle as a list of edges, if one exists.
fn find_cycle(n: usize, adj: &[Vec<usize>]) -> Option<Vec<(usize, usize)>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(v: usize, adj: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<(usize, usize)>> {
        state[v] = 1;
        stack.push(v);
        for &w in &adj[v] {
            if state[w] == 1 {
                let start = stack.iter().position(|&u| u == w).expect("w is on the stack");
                let mut cyc: Vec<(usize, usize)> = stack[start..].windows(2).map(|p| (p[0], p[1])).collect();
                cyc.push((v, w));
                return Some(cyc);
            }
            if state[w] == 0 {
                if let Some(c) = dfs(w, adj, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }
    (0..n).find_map(|v| if state[v] == 0 { dfs(v, adj, &mut state, &mut stack) } else { None })
}

pub fn deterministic_chronology(
    m: &EventMatrix,
    alpha: f64,
    correction: Correction,
) -> Result<BaselineChronology, ChronologyError> {
    let labels = m.columns();
    let d = labels.len();
    if d < 2 {
        return Err(ChronologyError::TooFewEvents(d));
    }
    let mut tests = Vec::new();
    let mut p = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let t = contingency(m, &labels[i], &labels[j])?;
            let pv = if t.is_empty() { 1.0 } else { fisher_exact(&t)? };
            p.push(pv);
            tests.push(PairTest {
                a: labels[i].clone(),
                b: labels[j].clone(),
                n10: t.n10,
                n01: t.n01,
                p_value: pv,
                p_adjusted: pv,
                dependent: false,
            });
        }
    }
    for (t, adj) in tests.iter_mut().zip(adjust_p_values(&p, correction)) {
        t.p_adjusted = adj;
        t.dependent = adj < alpha;
    }

    let mut parent: Vec<usize> = (0..d).collect();
    let mut k = 0;
    for i in 0..d {
        for j in i + 1..d {
            let t = &tests[k];
            if t.dependent && t.n10 == t.n01 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
            k += 1;
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..d {
        members.entry(find(&mut parent, v)).or_default().push(v);
    }
    let group_of: Vec<usize> = {
        let mut g = vec![0; d];
        for (gi, vs) in members.values().enumerate() {
            for &v in vs {
                g[v] = gi;
            }
        }
        g
    };
    let nodes: Vec<String> = members
        .values()
        .map(|vs| vs.iter().map(|&v| labels[v].as_str()).collect::<Vec<_>>().join("+"))
        .collect();
    let simultaneity_groups: Vec<Vec<String>> = members
        .values()
        .filter(|vs| vs.len() > 1)
        .map(|vs| vs.iter().map(|&v| labels[v].clone()).collect())
        .collect();

    let mut margin: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut k = 0;
    for i in 0..d {
        for j in i + 1..d {
            let t = &tests[k];
            k += 1;
            if !t.dependent || t.n10 == t.n01 {
                continue;
            }
            let (from, to) = if t.n10 > t.n01 { (i, j) } else { (j, i) };
            let (gf, gt) = (group_of[from], group_of[to]);
            if gf == gt {
                continue;
            }
            let e = margin.entry((gf, gt)).or_insert(0);
            *e = (*e).max(t.n10.abs_diff(t.n01));
        }
    }

    let n = nodes.len();
    let mut removed = Vec::new();
    loop {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in margin.keys() {
            adj[a].push(b);
        }
        let Some(cycle) = find_cycle(n, &adj) else { break };
        let &weakest = cycle
            .iter()
            .min_by_key(|e| (margin[e], &nodes[e.0], &nodes[e.1]))
            .expect("cycles have edges");
        let mg = margin.remove(&weakest).expect("edge present");
        log::warn!(
            "baseline orientation produced a cycle; removed {} -> {} (margin {mg})",
            nodes[weakest.0],
            nodes[weakest.1]
        );
        removed.push(RemovedEdge {
            from: nodes[weakest.0].clone(),
            to: nodes[weakest.1].clone(),
            margin: mg,
        });
    }
    let edges: Vec<(String, String)> = margin.keys().map(|&(a, b)| (nodes[a].clone(), nodes[b].clone())).collect();
    let dag = Dag::new(nodes.clone(), &edges)?;
    Ok(BaselineChronology {
        edges: dag.edge_labels(),
        nodes,
        simultaneity_groups,
        tests,
        removed_for_cycles: removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Cell;

    /// Rows realising the given pair counts (n00, n01, n10, n11).
    fn pair_matrix(a: &str, b: &str, counts: [usize; 4]) -> EventMatrix {
        let mut rows = Vec::new();
        for (k, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                rows.push(vec![Cell::from_bit(k >= 2), Cell::from_bit(k % 2 == 1)]);
            }
        }
        EventMatrix::new(vec![a.into(), b.into()], rows, "t").unwrap()
    }

    #[test]
    fn orients_by_exclusive_counts() {
        let m = pair_matrix("A", "B", [82, 144, 39, 304]);
        let b = deterministic_chronology(&m, 0.05, Correction::BenjaminiHochberg).unwrap();
        assert_eq!(b.edges, vec![("B".to_string(), "A".to_string())]);
    }

    #[test]
    fn equal_counts_merge() {
        let m = pair_matrix("A", "B", [50, 5, 5, 50]);
        let b = deterministic_chronology(&m, 0.05, Correction::BenjaminiHochberg).unwrap();
        assert_eq!(b.nodes, vec!["A+B"]);
        assert_eq!(b.simultaneity_groups, vec![vec!["A".to_string(), "B".to_string()]]);
    }

    #[test]
    fn independent_pair_isolated() {
        let m = pair_matrix("A", "B", [25, 25, 25, 25]);
        let b = deterministic_chronology(&m, 0.05, Correction::Bonferroni).unwrap();
        assert!(b.edges.is_empty());
        assert_eq!(b.nodes.len(), 2);
    }

    #[test]
    fn cycle_detection() {
        let adj = vec![vec![1], vec![2], vec![0]];
        assert_eq!(find_cycle(3, &adj).unwrap().len(), 3);
        assert!(find_cycle(3, &[vec![1], vec![2], vec![]]).is_none());
    }
}
