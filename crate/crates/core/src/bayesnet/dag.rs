use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use super::BayesNetError;

/// Directed acyclic graph over labelled nodes. Acyclicity is checked on every
/// mutation; node order is the declared order and drives all tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(nodes: Vec<String>) -> Result<Self, BayesNetError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if n.is_empty() {
                return Err(BayesNetError::EmptyLabel);
            }
            if index.insert(n.clone(), i).is_some() {
                return Err(BayesNetError::DuplicateLabel(n.clone()));
            }
        }
        let d = nodes.len();
        Ok(Self {
            nodes,
            index,
            parents: vec![Vec::new(); d],
            children: vec![Vec::new(); d],
        })
    }

    pub fn new<S: AsRef<str>>(nodes: Vec<String>, edges: &[(S, S)]) -> Result<Self, BayesNetError> {
        let mut g = Self::empty(nodes)?;
        for (p, c) in edges {
            let p = g.index_of(p.as_ref())?;
            let c = g.index_of(c.as_ref())?;
            g.add_edge(p, c)?;
        }
        Ok(g)
    }

    pub fn from_indices(nodes: Vec<String>, edges: &[(usize, usize)]) -> Result<Self, BayesNetError> {
        let mut g = Self::empty(nodes)?;
        for &(p, c) in edges {
            g.add_edge(p, c)?;
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn label(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize, BayesNetError> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| BayesNetError::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    /// Sorted parent indices.
    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn has_edge(&self, p: usize, c: usize) -> bool {
        self.parents[c].binary_search(&p).is_ok()
    }

    /// Edges as (parent, child), lexicographic by index.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = (0..self.n_nodes())
            .flat_map(|c| self.parents[c].iter().map(move |&p| (p, c)))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn edge_labels(&self) -> Vec<(String, String)> {
        self.edges()
            .into_iter()
            .map(|(p, c)| (self.nodes[p].clone(), self.nodes[c].clone()))
            .collect()
    }

    /// True if a directed path `from → … → to` exists (length ≥ 0).
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.n_nodes()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for &w in &self.children[u] {
                if w == to {
                    return true;
                }
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    pub fn add_edge(&mut self, p: usize, c: usize) -> Result<(), BayesNetError> {
        if p == c {
            return Err(BayesNetError::SelfLoop(self.nodes[p].clone()));
        }
        if self.has_edge(p, c) {
            return Ok(());
        }
        if self.has_path(c, p) {
            return Err(BayesNetError::Cycle {
                from: self.nodes[p].clone(),
                to: self.nodes[c].clone(),
            });
        }
        let pos = self.parents[c].binary_search(&p).unwrap_err();
        self.parents[c].insert(pos, p);
        let pos = self.children[p].binary_search(&c).unwrap_or_else(|e| e);
        self.children[p].insert(pos, c);
        Ok(())
    }

    pub fn remove_edge(&mut self, p: usize, c: usize) -> bool {
        match self.parents[c].binary_search(&p) {
            Ok(pos) => {
                self.parents[c].remove(pos);
                if let Ok(pos) = self.children[p].binary_search(&c) {
                    self.children[p].remove(pos);
                }
                true
            }
            Err(_) => false,
        }
    }

    pub fn is_root(&self, v: usize) -> bool {
        self.parents[v].is_empty()
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.parents[v].is_empty() && self.children[v].is_empty()
    }

    /// Kahn's algorithm, always releasing the smallest ready index first.
    pub fn topological_order(&self) -> Vec<usize> {
        let d = self.n_nodes();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            (0..d).filter(|&v| indeg[v] == 0).map(std::cmp::Reverse).collect();
        let mut order = Vec::with_capacity(d);
        while let Some(std::cmp::Reverse(u)) = ready.pop() {
            order.push(u);
            for &w in &self.children[u] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(std::cmp::Reverse(w));
                }
            }
        }
        order
    }

    /// Level 0 for roots, otherwise one more than the deepest parent.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0usize; self.n_nodes()];
        for v in self.topological_order() {
            level[v] = self.parents[v].iter().map(|&p| level[p] + 1).max().unwrap_or(0);
        }
        level
    }

    pub fn descendants(&self, v: usize) -> Vec<bool> {
        self.reach(v, &self.children)
    }

    pub fn ancestors(&self, v: usize) -> Vec<bool> {
        self.reach(v, &self.parents)
    }

    fn reach(&self, v: usize, adj: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.n_nodes()];
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Graph with edge `perm[a] → perm[b]` for every edge `a → b`, labels unchanged.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let edges: Vec<_> = self.edges().into_iter().map(|(a, b)| (perm[a], perm[b])).collect();
        Self::from_indices(self.nodes.clone(), &edges).expect("permutation preserves acyclicity")
    }

    /// Unordered adjacencies as (low, high) index pairs.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect()
    }

    /// Unshielded colliders `a → c ← b` as (a, c, b) with a < b.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for c in 0..self.n_nodes() {
            let ps = &self.parents[c];
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !self.has_edge(a, b) && !self.has_edge(b, a) {
                        out.insert((a.min(b), c, a.max(b)));
                    }
                }
            }
        }
        out
    }

    /// Same skeleton and v-structures, compared by index.
    pub fn markov_equivalent(&self, other: &Dag) -> bool {
        self.n_nodes() == other.n_nodes()
            && self.skeleton() == other.skeleton()
            && self.v_structures() == other.v_structures()
    }

    /// Same graph with nodes listed in `order` (must be a permutation of the labels).
    pub fn reordered(&self, order: &[String]) -> Result<Self, BayesNetError> {
        if order.len() != self.n_nodes() || order.iter().any(|l| !self.contains(l)) {
            return Err(BayesNetError::NodeSetMismatch);
        }
        Self::new(order.to_vec(), &self.edge_labels())
    }

    /// Same edges over a superset of nodes, listed in `order`.
    pub fn embedded(&self, order: &[String]) -> Result<Self, BayesNetError> {
        Self::new(order.to_vec(), &self.edge_labels())
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n");
        for n in &self.nodes {
            let _ = writeln!(s, "  \"{}\";", escape(n));
        }
        for (p, c) in self.edges() {
            let _ = writeln!(s, "  \"{}\" -> \"{}\";", escape(&self.nodes[p]), escape(&self.nodes[c]));
        }
        s.push_str("}\n");
        s
    }

    /// Edge-list text: `#nodes` and `#isolated` header lines, then one
    /// `parent<TAB>child` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::from("#nodes");
        for n in &self.nodes {
            let _ = write!(s, "\t{n}");
        }
        s.push_str("\n#isolated");
        for v in (0..self.n_nodes()).filter(|&v| self.is_isolated(v)) {
            let _ = write!(s, "\t{}", self.nodes[v]);
        }
        s.push('\n');
        for (p, c) in self.edges() {
            let _ = writeln!(s, "{}\t{}", self.nodes[p], self.nodes[c]);
        }
        s
    }

    /// Parses [`Dag::to_edge_list`] output. Without a `#nodes` line, node
    /// order is order of first appearance.
    pub fn from_edge_list(text: &str) -> Result<Self, BayesNetError> {
        let mut nodes: Vec<String> = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        let mut edges = Vec::new();
        let mut declared = false;
        fn push(nodes: &mut Vec<String>, seen: &mut HashSet<String>, n: &str) {
            if seen.insert(n.to_string()) {
                nodes.push(n.to_string());
            }
        }
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut fields = rest.split('\t');
                match fields.next().map(str::trim) {
                    Some("nodes") => {
                        declared = true;
                        for f in fields.filter(|f| !f.is_empty()) {
                            push(&mut nodes, &mut seen, f);
                        }
                    }
                    Some("isolated") => {
                        for f in fields.filter(|f| !f.is_empty()) {
                            push(&mut nodes, &mut seen, f);
                        }
                    }
                    _ => {}
                }
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
                return Err(BayesNetError::Parse {
                    line: lineno + 1,
                    message: format!("expected parent<TAB>child, got {line:?}"),
                });
            }
            if declared && (!seen.contains(parts[0]) || !seen.contains(parts[1])) {
                return Err(BayesNetError::Parse {
                    line: lineno + 1,
                    message: "edge endpoint missing from #nodes line".into(),
                });
            }
            push(&mut nodes, &mut seen, parts[0]);
            push(&mut nodes, &mut seen, parts[1]);
            edges.push((parts[0].to_string(), parts[1].to_string()));
        }
        Self::new(nodes, &edges)
    }
}

/// Levels keyed by label.
pub fn topological_levels(g: &Dag) -> BTreeMap<String, usize> {
    g.levels()
        .into_iter()
        .enumerate()
        .map(|(v, l)| (g.label(v).to_string(), l))
        .collect()
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn levels_chain_diamond_and_edgeless() {
        let chain = Dag::new(names(&["A", "B", "C"]), &[("A", "B"), ("B", "C")]).unwrap();
        let l = topological_levels(&chain);
        assert_eq!((l["A"], l["B"], l["C"]), (0, 1, 2));

        let empty = Dag::empty(names(&["A", "B", "C"])).unwrap();
        assert!(topological_levels(&empty).values().all(|&v| v == 0));

        let diamond = Dag::new(
            names(&["A", "B", "C", "D"]),
            &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
        )
        .unwrap();
        let l = topological_levels(&diamond);
        assert_eq!((l["A"], l["B"], l["C"], l["D"]), (0, 1, 1, 2));
    }

    #[test]
    fn cycles_and_self_loops_rejected() {
        let err = Dag::new(names(&["A", "B"]), &[("A", "B"), ("B", "A")]).unwrap_err();
        assert!(matches!(err, BayesNetError::Cycle { .. }));
        let err = Dag::new(names(&["A"]), &[("A", "A")]).unwrap_err();
        assert!(matches!(err, BayesNetError::SelfLoop(_)));
        assert!(Dag::empty(names(&["A", "A"])).is_err());
    }

    #[test]
    fn edge_list_round_trip_keeps_order_and_isolated_nodes() {
        let g = Dag::new(names(&["z", "y", "x", "w"]), &[("y", "x"), ("z", "x")]).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("#nodes\tz\ty\tx\tw\n#isolated\tw\n"));
        assert_eq!(Dag::from_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn edge_list_without_nodes_line() {
        let g = Dag::from_edge_list("#isolated\tq\na\tb\n").unwrap();
        assert_eq!(g.nodes(), &names(&["q", "a", "b"])[..]);
        assert!(Dag::from_edge_list("a b\n").is_err());
    }

    #[test]
    fn dot_lists_nodes_and_edges() {
        let g = Dag::new(names(&["a", "b"]), &[("a", "b")]).unwrap();
        let dot = g.to_dot();
        assert!(dot.contains("\"a\" -> \"b\";"));
        assert!(dot.starts_with("digraph"));
    }

    #[test]
    fn permutation_moves_edges() {
        let g = Dag::new(names(&["a", "b", "c"]), &[("a", "b")]).unwrap();
        let p = g.permuted(&[2, 0, 1]);
        assert_eq!(p.edge_labels(), vec![("c".to_string(), "a".to_string())]);
    }

    #[test]
    fn reversed_chain_is_equivalent_but_collider_is_not() {
        let n = names(&["a", "b", "c"]);
        let chain = Dag::new(n.clone(), &[("a", "b"), ("b", "c")]).unwrap();
        let back = Dag::new(n.clone(), &[("c", "b"), ("b", "a")]).unwrap();
        let collider = Dag::new(n.clone(), &[("a", "b"), ("c", "b")]).unwrap();
        assert!(chain.markov_equivalent(&back));
        assert!(!chain.markov_equivalent(&collider));
        assert_eq!(collider.v_structures().len(), 1);
        let shielded = Dag::new(n, &[("a", "b"), ("c", "b"), ("a", "c")]).unwrap();
        assert!(shielded.v_structures().is_empty());
    }
}
