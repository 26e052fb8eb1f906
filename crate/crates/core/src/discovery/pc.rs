//! PC algorithm: order-independent skeleton search with G² tests,
//! v-structure orientation, Meek closure, and a DAG extension that follows
//! the column order for edges the data leaves undirected.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::independence::g2_binary;
use crate::bayesnet::Dag;
use crate::dataset::BinaryData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcConfig {
    pub alpha: f64,
    /// Largest conditioning set tried; unbounded when `None`.
    pub max_cond_size: Option<usize>,
}

impl Default for PcConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            max_cond_size: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcResult {
    pub dag: Dag,
    /// Edges left undirected by the data and oriented by column order.
    pub order_forced: Vec<(usize, usize)>,
    /// Separating sets of removed pairs `(x, y)` with `x < y`.
    pub sepsets: HashMap<(usize, usize), Vec<usize>>,
}

/// Partially directed graph: `mark[i][j]` means an arrowhead at `j` is
/// allowed. Undirected: both marks; `i → j`: `mark[i][j] && !mark[j][i]`.
struct Pdag {
    mark: Vec<Vec<bool>>,
}

impl Pdag {
    fn adjacent(&self, i: usize, j: usize) -> bool {
        self.mark[i][j] || self.mark[j][i]
    }
    fn directed(&self, i: usize, j: usize) -> bool {
        self.mark[i][j] && !self.mark[j][i]
    }
    fn undirected(&self, i: usize, j: usize) -> bool {
        self.mark[i][j] && self.mark[j][i]
    }
    fn orient(&mut self, i: usize, j: usize) {
        self.mark[j][i] = false;
    }
    fn n(&self) -> usize {
        self.mark.len()
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

pub(crate) fn skeleton(
    data: &BinaryData,
    cfg: &PcConfig,
) -> (Vec<Vec<bool>>, HashMap<(usize, usize), Vec<usize>>) {
    let d = data.n_cols();
    let mut adj = vec![vec![true; d]; d];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = false;
    }
    let mut sepsets = HashMap::new();
    let max_l = cfg.max_cond_size.unwrap_or(usize::MAX);
    let mut l = 0usize;
    loop {
        // Neighbourhoods are frozen for the whole level.
        let snapshot: Vec<Vec<usize>> = (0..d).map(|i| (0..d).filter(|&j| adj[i][j]).collect()).collect();
        let any = (0..d).any(|x| snapshot[x].iter().any(|&y| snapshot[x].len() - 1 >= l && y != x));
        if !any || l > max_l {
            break;
        }
        let mut removals = Vec::new();
        for x in 0..d {
            for y in x + 1..d {
                if !adj[x][y] {
                    continue;
                }
                let mut found = None;
                'search: for (a, b) in [(x, y), (y, x)] {
                    let others: Vec<usize> = snapshot[a].iter().copied().filter(|&v| v != b).collect();
                    if others.len() < l {
                        continue;
                    }
                    for s in combinations(&others, l) {
                        if g2_binary(data, x, y, &s).p_value > cfg.alpha {
                            found = Some(s);
                            break 'search;
                        }
                    }
                }
                if let Some(s) = found {
                    removals.push((x, y, s));
                }
            }
        }
        for (x, y, s) in removals {
            adj[x][y] = false;
            adj[y][x] = false;
            sepsets.insert((x, y), s);
        }
        l += 1;
    }
    (adj, sepsets)
}

fn orient_v_structures(p: &mut Pdag, adj: &[Vec<bool>], sepsets: &HashMap<(usize, usize), Vec<usize>>) {
    let d = p.n();
    for z in 0..d {
        for x in 0..d {
            for y in x + 1..d {
                if x == z || y == z || !adj[x][z] || !adj[y][z] || adj[x][y] {
                    continue;
                }
                let sep = sepsets.get(&(x, y)).map(Vec::as_slice).unwrap_or(&[]);
                if sep.contains(&z) {
                    continue;
                }
                // Keep earlier orientations when two v-structures disagree.
                if p.mark[x][z] && p.mark[y][z] {
                    p.orient(x, z);
                    p.orient(y, z);
                }
            }
        }
    }
}

fn has_directed_path(p: &Pdag, from: usize, to: usize) -> bool {
    let d = p.n();
    let mut seen = vec![false; d];
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for w in 0..d {
            if p.directed(u, w) && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Meek rules R1–R4 applied to a fixed point.
fn meek_closure(p: &mut Pdag) {
    let d = p.n();
    loop {
        let mut changed = false;
        for a in 0..d {
            for b in 0..d {
                if a == b || !p.undirected(a, b) {
                    continue;
                }
                // R1: c → a − b, c and b non-adjacent
                let r1 = (0..d).any(|c| c != b && p.directed(c, a) && !p.adjacent(c, b));
                // R2: a → c → b
                let r2 = (0..d).any(|c| p.directed(a, c) && p.directed(c, b));
                // R3: a − c → b, a − e → b, c and e non-adjacent
                let r3 = (0..d).any(|c| {
                    p.undirected(a, c)
                        && p.directed(c, b)
                        && (c + 1..d).any(|e| p.undirected(a, e) && p.directed(e, b) && !p.adjacent(c, e))
                });
                // R4: a − c → e → b with a adjacent to e, c and b non-adjacent
                let r4 = (0..d).any(|c| {
                    c != b
                        && p.undirected(a, c)
                        && !p.adjacent(c, b)
                        && (0..d).any(|e| p.directed(c, e) && p.directed(e, b) && p.adjacent(a, e))
                });
                if r1 || r2 || r3 || r4 {
                    p.orient(a, b);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn creates_v_structure(p: &Pdag, i: usize, j: usize) -> bool {
    (0..p.n()).any(|k| k != i && p.directed(k, j) && !p.adjacent(k, i))
}

pub fn pc_learn(data: &BinaryData, cfg: &PcConfig) -> PcResult {
    let d = data.n_cols();
    let (adj, sepsets) = skeleton(data, cfg);
    let mut p = Pdag { mark: adj.clone() };
    orient_v_structures(&mut p, &adj, &sepsets);
    meek_closure(&mut p);

    let undirected_in_cpdag: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .filter(|&(i, j)| p.undirected(i, j))
        .collect();

    // Extension: orient remaining undirected edges along the column order,
    // flipping when that would close a cycle or create a v-structure.
    for &(i, j) in &undirected_in_cpdag {
        if !p.undirected(i, j) {
            continue;
        }
        let forward_ok = !has_directed_path(&p, j, i) && !creates_v_structure(&p, i, j);
        let backward_ok = !has_directed_path(&p, i, j) && !creates_v_structure(&p, j, i);
        if forward_ok || (!backward_ok && !has_directed_path(&p, j, i)) {
            p.orient(i, j);
        } else {
            p.orient(j, i);
        }
        meek_closure(&mut p);
    }

    let mut dag = Dag::empty(data.labels().to_vec()).expect("labels already validated");
    let mut order_forced = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if p.directed(i, j) {
                let forced = undirected_in_cpdag.contains(&(i.min(j), i.max(j)));
                if dag.add_edge(i, j).is_err() {
                    log::warn!(
                        "PC: orientation {} -> {} closes a cycle; reversed",
                        dag.label(i),
                        dag.label(j)
                    );
                    dag.add_edge(j, i).expect("reversal of a cycle-closing edge is acyclic");
                    order_forced.push((j, i));
                } else if forced {
                    order_forced.push((i, j));
                }
            }
        }
    }
    order_forced.sort_unstable();
    PcResult {
        dag,
        order_forced,
        sepsets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_in_lexicographic_order() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(&[1, 2], 0), vec![Vec::<usize>::new()]);
        assert!(combinations(&[1], 2).is_empty());
    }

    #[test]
    fn meek_r1_propagates_away_from_collider() {
        // a → b − c, a and c non-adjacent ⇒ b → c
        let mut p = Pdag {
            mark: vec![
                vec![false, true, false],
                vec![false, false, true],
                vec![false, true, false],
            ],
        };
        meek_closure(&mut p);
        assert!(p.directed(1, 2));
    }

    #[test]
    fn meek_r2_avoids_cycles() {
        // a → c → b and a − b ⇒ a → b
        let mut p = Pdag {
            mark: vec![
                vec![false, true, true],
                vec![true, false, false],
                vec![false, true, false],
            ],
        };
        meek_closure(&mut p);
        assert!(p.directed(0, 1));
    }
}
