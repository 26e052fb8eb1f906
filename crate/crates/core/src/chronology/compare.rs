//! Scoring competing models and summarising edges they agree on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ChronologyError;
use crate::bayesnet::{bic_score, fit_cpts, log_likelihood, Dag};
use crate::dataset::EventMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub name: String,
    pub bic: f64,
    pub log_likelihood: f64,
    pub n_edges: usize,
}

/// BIC and log-likelihood per model, best BIC first (higher is better).
pub fn compare_models(models: &[(String, Dag)], data: &EventMatrix, ess: f64) -> Result<Vec<ModelScore>, ChronologyError> {
    let columns: BTreeSet<&str> = data.columns().iter().map(String::as_str).collect();
    let mut out = Vec::with_capacity(models.len());
    for (name, g) in models {
        let nodes: BTreeSet<&str> = g.nodes().iter().map(String::as_str).collect();
        if nodes != columns {
            return Err(ChronologyError::ModelMismatch(name.clone()));
        }
        let bn = fit_cpts(g, data, ess)?;
        out.push(ModelScore {
            name: name.clone(),
            bic: bic_score(g, data)?,
            log_likelihood: log_likelihood(&bn, data)?,
            n_edges: g.n_edges(),
        });
    }
    out.sort_by(|a, b| b.bic.total_cmp(&a.bic).then_with(|| a.name.cmp(&b.name)));
    Ok(out)
}

pub fn write_scores_csv(scores: &[ModelScore], writer: impl std::io::Write) -> Result<(), ChronologyError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| ChronologyError::Io(e.to_string());
    w.write_record(["model", "bic", "log_likelihood", "n_edges"]).map_err(io)?;
    for s in scores {
        w.write_record([s.name.clone(), s.bic.to_string(), s.log_likelihood.to_string(), s.n_edges.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| ChronologyError::Io(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCount {
    pub from: String,
    pub to: String,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsensusSummary {
    pub n_models: usize,
    /// Models containing `from → to`.
    pub directed: Vec<EdgeCount>,
    /// Models containing the pair in either direction; `from < to`.
    pub undirected: Vec<EdgeCount>,
    pub consensus_directed: Vec<(String, String)>,
    pub consensus_undirected: Vec<(String, String)>,
}

/// Edges found by at least two of `dags`.
pub fn consensus_edges(dags: &[Dag]) -> ConsensusSummary {
    let mut directed: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut undirected: BTreeMap<(String, String), usize> = BTreeMap::new();
    for g in dags {
        let mut pairs = BTreeSet::new();
        for (a, b) in g.edge_labels() {
            *directed.entry((a.clone(), b.clone())).or_default() += 1;
            pairs.insert(if a < b { (a, b) } else { (b, a) });
        }
        for p in pairs {
            *undirected.entry(p).or_default() += 1;
        }
    }
    let list = |m: &BTreeMap<(String, String), usize>| -> Vec<EdgeCount> {
        m.iter()
            .map(|((a, b), &count)| EdgeCount {
                from: a.clone(),
                to: b.clone(),
                count,
            })
            .collect()
    };
    let at_least_two = |m: &BTreeMap<(String, String), usize>| -> Vec<(String, String)> {
        m.iter().filter(|(_, &c)| c >= 2).map(|(k, _)| k.clone()).collect()
    };
    ConsensusSummary {
        n_models: dags.len(),
        directed: list(&directed),
        undirected: list(&undirected),
        consensus_directed: at_least_two(&directed),
        consensus_undirected: at_least_two(&undirected),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(nodes: &[&str], edges: &[(&str, &str)]) -> Dag {
        Dag::new(nodes.iter().map(|s| s.to_string()).collect(), edges).unwrap()
    }

    #[test]
    fn consensus_examples() {
        let a = g(&["a", "b"], &[("a", "b")]);
        let s = consensus_edges(&[a.clone(), a.clone()]);
        assert_eq!(s.directed[0].count, 2);
        let b = g(&["a", "b"], &[("b", "a")]);
        let s = consensus_edges(&[a, b]);
        assert_eq!(s.directed.iter().map(|e| e.count).collect::<Vec<_>>(), vec![1, 1]);
        assert_eq!(s.undirected[0].count, 2);
        assert!(s.consensus_directed.is_empty());
        assert_eq!(s.consensus_undirected.len(), 1);
        assert_eq!(consensus_edges(&[]), ConsensusSummary::default());
    }

    #[test]
    fn mismatched_model_rejected() {
        let data = EventMatrix::from_bits(vec!["a".into(), "b".into()], &[vec![0, 1]]).unwrap();
        let model = g(&["a", "c"], &[]);
        assert!(matches!(
            compare_models(&[("m".into(), model)], &data, 1.0),
            Err(ChronologyError::ModelMismatch(_))
        ));
    }
}
