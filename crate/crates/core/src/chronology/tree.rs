//! Chronology trees built from the strongest validated causal relations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::ChronologyError;
use crate::bayesnet::{escape, topological_levels, Dag};
use crate::causal::{CausalRelation, CausalRelationTable};

/// For each outcome, the validated relation with the largest value. Ties go
/// to the source with the lower topological level in `g`, then the smaller
/// treatment label.
pub fn strong_causal_relations(table: &CausalRelationTable, g: &Dag) -> Vec<CausalRelation> {
    let levels = topological_levels(g);
    let level = |l: &str| levels.get(l).copied().unwrap_or(usize::MAX);
    let mut best: BTreeMap<&str, &CausalRelation> = BTreeMap::new();
    for r in table.validated() {
        match best.get(r.outcome.as_str()) {
            Some(cur) => {
                let better = r.value > cur.value
                    || (r.value == cur.value
                        && (level(&r.treatment), &r.treatment) < (level(&cur.treatment), &cur.treatment));
                if better {
                    best.insert(&r.outcome, r);
                }
            }
            None => {
                best.insert(&r.outcome, r);
            }
        }
    }
    let mut out: Vec<CausalRelation> = best.into_values().cloned().collect();
    out.sort_by(|a, b| (level(&a.treatment), &a.treatment, &a.outcome).cmp(&(level(&b.treatment), &b.treatment, &b.outcome)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub from: String,
    pub to: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChronologyTree {
    /// Every node of the source graph, in its node order.
    pub nodes: Vec<String>,
    /// Depth in the forest; roots and isolated nodes at 0.
    pub levels: BTreeMap<String, usize>,
    pub edges: Vec<TreeEdge>,
    /// Nodes with no tree edge.
    pub isolated: Vec<String>,
    /// Merged events (frequency baseline only).
    pub simultaneity_groups: Vec<Vec<String>>,
}

/// Assembles the tree from `strong` (a subset of `g`'s edges, one per outcome).
pub fn build_chronology(g: &Dag, strong: &[CausalRelation]) -> Result<ChronologyTree, ChronologyError> {
    let src_levels = topological_levels(g);
    let mut ordered: Vec<&CausalRelation> = strong.iter().collect();
    ordered.sort_by_key(|r| src_levels.get(&r.treatment).copied().unwrap_or(usize::MAX));
    let mut edges = Vec::new();
    let mut has_parent = BTreeSet::new();
    for r in ordered {
        let (p, c) = (g.index_of(&r.treatment)?, g.index_of(&r.outcome)?);
        if !g.has_edge(p, c) {
            return Err(ChronologyError::NotAnEdge(r.treatment.clone(), r.outcome.clone()));
        }
        if !has_parent.insert(c) {
            return Err(ChronologyError::DuplicateOutcome(r.outcome.clone()));
        }
        edges.push((p, c, r.value));
    }
    let tree = Dag::from_indices(g.nodes().to_vec(), &edges.iter().map(|&(p, c, _)| (p, c)).collect::<Vec<_>>())?;
    let mut levels = BTreeMap::new();
    let mut depth = vec![0usize; g.n_nodes()];
    for v in tree.topological_order() {
        if let Some(&p) = tree.parents(v).first() {
            depth[v] = depth[p] + 1;
        }
        levels.insert(g.label(v).to_string(), depth[v]);
    }
    let isolated = (0..g.n_nodes()).filter(|&v| tree.is_isolated(v)).map(|v| g.label(v).to_string()).collect();
    let mut out_edges: Vec<TreeEdge> = edges
        .into_iter()
        .map(|(p, c, value)| TreeEdge {
            from: g.label(p).to_string(),
            to: g.label(c).to_string(),
            value,
        })
        .collect();
    out_edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    Ok(ChronologyTree {
        nodes: g.nodes().to_vec(),
        levels,
        edges: out_edges,
        isolated,
        simultaneity_groups: Vec::new(),
    })
}

impl ChronologyTree {
    pub fn dag(&self) -> Dag {
        let edges: Vec<(&str, &str)> = self.edges.iter().map(|e| (e.from.as_str(), e.to.as_str())).collect();
        Dag::new(self.nodes.clone(), &edges).expect("tree edges form a forest over its nodes")
    }

    pub fn edge_pairs(&self) -> Vec<(String, String)> {
        self.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect()
    }

    pub fn to_edge_list(&self) -> String {
        self.dag().to_edge_list()
    }

    /// DOT with one `rank=same` group per level.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph chronology {\n  rankdir=TB;\n");
        let mut by_level: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for n in &self.nodes {
            by_level.entry(self.levels[n]).or_default().push(n);
        }
        for (level, nodes) in &by_level {
            let _ = write!(s, "  {{ rank=same; /* level {level} */");
            for n in nodes {
                let _ = write!(s, " \"{}\";", escape(n));
            }
            s.push_str(" }\n");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  \"{}\" -> \"{}\" [label=\"{:.3}\"];", escape(&e.from), escape(&e.to), e.value);
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::EstimandKind;

    fn rel(x: &str, y: &str, v: f64) -> CausalRelation {
        CausalRelation {
            treatment: x.into(),
            outcome: y.into(),
            kind: EstimandKind::Ace,
            value: v,
            adjustment_set: vec![],
            mediators: vec![],
            validated: v > 0.0,
            placebo_pass: None,
            subset_pass: None,
            rcc_pass: None,
            total_effect: Some(v),
            nie: None,
            error: None,
        }
    }

    fn g(nodes: &[&str], edges: &[(&str, &str)]) -> Dag {
        Dag::new(nodes.iter().map(|s| s.to_string()).collect(), edges).unwrap()
    }

    #[test]
    fn max_rule_and_tie_break() {
        let dag = g(&["a", "b", "y"], &[("a", "b"), ("a", "y"), ("b", "y")]);
        let t = CausalRelationTable { rows: vec![rel("a", "y", 0.5), rel("b", "y", 0.3)] };
        let s = strong_causal_relations(&t, &dag);
        assert_eq!((s.len(), s[0].treatment.as_str()), (1, "a"));
        let t = CausalRelationTable { rows: vec![rel("b", "y", 0.4), rel("a", "y", 0.4)] };
        assert_eq!(strong_causal_relations(&t, &dag)[0].treatment, "a");
        assert!(strong_causal_relations(&CausalRelationTable::default(), &dag).is_empty());
    }

    #[test]
    fn chain_is_its_own_chronology() {
        let dag = g(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let t = build_chronology(&dag, &[rel("a", "b", 0.6), rel("b", "c", 0.5)]).unwrap();
        assert_eq!(t.edge_pairs(), dag.edge_labels());
        assert_eq!(t.levels["c"], 2);
        assert!(t.isolated.is_empty());
    }

    #[test]
    fn diamond_keeps_unused_node_isolated() {
        let dag = g(&["a", "b", "c", "d"], &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]);
        let t = build_chronology(&dag, &[rel("a", "b", 0.6), rel("b", "d", 0.5)]).unwrap();
        assert_eq!(t.isolated, vec!["c"]);
        assert_eq!(t.levels["c"], 0);
        assert_eq!(t.levels["d"], 2);
    }

    #[test]
    fn empty_strong_set_isolates_everything() {
        let dag = g(&["a", "b"], &[("a", "b")]);
        let t = build_chronology(&dag, &[]).unwrap();
        assert_eq!(t.isolated.len(), 2);
        assert!(t.levels.values().all(|&l| l == 0));
    }

    #[test]
    fn rejects_foreign_and_duplicate_edges() {
        let dag = g(&["a", "b", "c"], &[("a", "c"), ("b", "c")]);
        assert!(matches!(build_chronology(&dag, &[rel("c", "a", 0.1)]), Err(ChronologyError::NotAnEdge(..))));
        assert!(matches!(
            build_chronology(&dag, &[rel("a", "c", 0.1), rel("b", "c", 0.2)]),
            Err(ChronologyError::DuplicateOutcome(_))
        ));
    }

    #[test]
    fn dot_ranks_by_level() {
        let dag = g(&["a", "b"], &[("a", "b")]);
        let dot = build_chronology(&dag, &[rel("a", "b", 0.25)]).unwrap().to_dot();
        assert!(dot.contains("rank=same; /* level 0 */ \"a\";"));
        assert!(dot.contains("\"a\" -> \"b\" [label=\"0.250\"]"));
    }
}
