use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{BayesNetError, Dag};

/// `x ⟂ y | z`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CiStatement {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
}

pub fn d_separated(g: &Dag, x: &str, y: &str, z: &[&str]) -> Result<bool, BayesNetError> {
    let xi = g.index_of(x)?;
    let yi = g.index_of(y)?;
    let zi = z.iter().map(|l| g.index_of(l)).collect::<Result<Vec<_>, _>>()?;
    if xi == yi || zi.contains(&xi) || zi.contains(&yi) {
        return Err(BayesNetError::InvalidCiQuery);
    }
    Ok(d_separated_idx(g, xi, yi, &zi))
}

/// Reachability over active trails ("Bayes ball").
pub fn d_separated_idx(g: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
    let n = g.n_nodes();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    // Z together with its ancestors: colliders there are open.
    let mut anc_z = in_z.clone();
    let mut stack: Vec<usize> = z.to_vec();
    while let Some(v) = stack.pop() {
        for &p in g.parents(v) {
            if !anc_z[p] {
                anc_z[p] = true;
                stack.push(p);
            }
        }
    }
    // visited[v][0]: reached from a child (moving up); [1]: from a parent (moving down)
    let mut visited = vec![[false; 2]; n];
    let mut queue = VecDeque::from([(x, 0usize)]);
    while let Some((v, dir)) = queue.pop_front() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if v == y {
            return false;
        }
        if dir == 0 {
            if !in_z[v] {
                queue.extend(g.parents(v).iter().map(|&p| (p, 0)));
                queue.extend(g.children(v).iter().map(|&c| (c, 1)));
            }
        } else {
            if !in_z[v] {
                queue.extend(g.children(v).iter().map(|&c| (c, 1)));
            }
            if anc_z[v] {
                queue.extend(g.parents(v).iter().map(|&p| (p, 0)));
            }
        }
    }
    true
}

/// Local Markov statements `v ⟂ u | parents(v)` for every non-descendant,
/// non-parent `u`; a statement whose mirror image was already emitted is skipped.
pub fn local_markov_statements(g: &Dag) -> Vec<CiStatement> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<(usize, usize, Vec<usize>)> = BTreeSet::new();
    for v in 0..g.n_nodes() {
        let desc = g.descendants(v);
        let parents = g.parents(v);
        for u in 0..g.n_nodes() {
            if u == v || desc[u] || parents.contains(&u) {
                continue;
            }
            let key = (v.min(u), v.max(u), parents.to_vec());
            if !seen.insert(key) {
                continue;
            }
            out.push(CiStatement {
                x: g.label(v).to_string(),
                y: g.label(u).to_string(),
                z: parents.iter().map(|&p| g.label(p).to_string()).collect(),
            });
        }
    }
    out
}
