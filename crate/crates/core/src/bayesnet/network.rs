use serde::{Deserialize, Serialize};

use super::{BayesNetError, Dag};
use crate::dataset::{BinaryData, EventMatrix};
use crate::Scalar;

/// Default floor applied to zero probabilities inside log-likelihoods.
pub const DEFAULT_LL_FLOOR: f64 = 1e-9;

/// P(node = 1) for every assignment of `parents`, in binary counting order
/// with the first parent as the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt<T> {
    pub node: String,
    pub parents: Vec<String>,
    pub p1: Vec<T>,
}

impl<T: Scalar> Cpt<T> {
    pub fn new(node: impl Into<String>, parents: Vec<String>, p1: Vec<T>) -> Result<Self, BayesNetError> {
        let node = node.into();
        if p1.len() != 1usize << parents.len() {
            return Err(BayesNetError::CptShape {
                node,
                expected: 1 << parents.len(),
                found: p1.len(),
            });
        }
        if let Some(p) = p1.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
            return Err(BayesNetError::InvalidProbability {
                node,
                value: p.as_f64(),
            });
        }
        Ok(Self { node, parents, p1 })
    }
}

/// A DAG plus one CPT per node.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteBayesNet<T> {
    dag: Dag,
    cpts: Vec<Cpt<T>>,
}

impl<T: Scalar> DiscreteBayesNet<T> {
    /// `cpts` may come in any order; each CPT's parent list must equal the
    /// node's parent set in `dag`, listed in DAG node order.
    pub fn new(dag: Dag, cpts: Vec<Cpt<T>>) -> Result<Self, BayesNetError> {
        let mut slots: Vec<Option<Cpt<T>>> = vec![None; dag.n_nodes()];
        for cpt in cpts {
            let v = dag.index_of(&cpt.node)?;
            let expected: Vec<&str> = dag.parents(v).iter().map(|&p| dag.label(p)).collect();
            if cpt.parents.iter().map(String::as_str).ne(expected.iter().copied()) {
                return Err(BayesNetError::ParentMismatch(cpt.node.clone()));
            }
            if slots[v].replace(cpt).is_some() {
                return Err(BayesNetError::DuplicateLabel(dag.label(v).to_string()));
            }
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| BayesNetError::MissingCpt(dag.label(v).to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { dag, cpts })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpts(&self) -> &[Cpt<T>] {
        &self.cpts
    }

    pub fn cpt(&self, v: usize) -> &Cpt<T> {
        &self.cpts[v]
    }

    /// P(v = 1 | parents) given a full assignment indexed by node.
    pub fn p1_given(&self, v: usize, assignment: &[bool]) -> T {
        let mut cfg = 0usize;
        for &p in self.dag.parents(v) {
            cfg = (cfg << 1) | usize::from(assignment[p]);
        }
        self.cpts[v].p1[cfg]
    }

    /// P(v = value | parents).
    pub fn p_given(&self, v: usize, value: bool, assignment: &[bool]) -> T {
        let p = self.p1_given(v, assignment);
        if value {
            p
        } else {
            T::one() - p
        }
    }

    /// Network whose node `v` has no parents and `P(v = 1) = p1`; the do-operator.
    pub fn with_root_cpt(&self, v: usize, p1: T) -> Self {
        let mut dag = self.dag.clone();
        for p in self.dag.parents(v).to_vec() {
            dag.remove_edge(p, v);
        }
        let mut cpts = self.cpts.clone();
        cpts[v] = Cpt {
            node: self.dag.label(v).to_string(),
            parents: Vec::new(),
            p1: vec![p1],
        };
        Self { dag, cpts }
    }

    /// Same DAG, CPT of `v` replaced (parent list unchanged).
    pub fn with_cpt_values(&self, v: usize, p1: Vec<T>) -> Result<Self, BayesNetError> {
        let cpt = Cpt::new(self.cpts[v].node.clone(), self.cpts[v].parents.clone(), p1)?;
        let mut cpts = self.cpts.clone();
        cpts[v] = cpt;
        Ok(Self {
            dag: self.dag.clone(),
            cpts,
        })
    }

    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            nodes: self.dag.nodes().to_vec(),
            edges: self.dag.edge_labels().into_iter().map(|(p, c)| [p, c]).collect(),
            cpts: self
                .cpts
                .iter()
                .map(|c| CptJson {
                    node: c.node.clone(),
                    parents: c.parents.clone(),
                    p1_by_assignment: c.p1.iter().map(|p| p.as_f64()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &NetworkJson) -> Result<Self, BayesNetError> {
        let dag = Dag::new(
            json.nodes.clone(),
            &json
                .edges
                .iter()
                .map(|[p, c]| (p.clone(), c.clone()))
                .collect::<Vec<_>>(),
        )?;
        let cpts = json
            .cpts
            .iter()
            .map(|c| {
                Cpt::new(
                    c.node.clone(),
                    c.parents.clone(),
                    c.p1_by_assignment.iter().map(|&p| T::lit(p)).collect(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dag, cpts)
    }
}

/// Serialized network: `{nodes, edges, cpts: [{node, parents, p1_by_assignment}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
    pub cpts: Vec<CptJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptJson {
    pub node: String,
    pub parents: Vec<String>,
    pub p1_by_assignment: Vec<f64>,
}

/// Columns of `data` in the DAG's node order.
pub(crate) fn aligned_data(g: &Dag, data: &EventMatrix) -> Result<BinaryData, BayesNetError> {
    for n in g.nodes() {
        if data.column_index(n).is_err() {
            return Err(BayesNetError::NodeAbsent(n.clone()));
        }
    }
    let m = data.select_columns(g.nodes())?;
    Ok(m.to_binary()?)
}

/// Bayesian CPT estimate with a symmetric prior of total strength `ess`:
/// `(n1 + ess/2) / (n + ess)`. With `ess = 0` an unseen parent assignment gets 0.5.
pub fn fit_cpts<T: Scalar>(g: &Dag, data: &EventMatrix, ess: T) -> Result<DiscreteBayesNet<T>, BayesNetError> {
    let bin = aligned_data(g, data)?;
    fit_cpts_binary(g, &bin, ess)
}

pub(crate) fn fit_cpts_binary<T: Scalar>(
    g: &Dag,
    bin: &BinaryData,
    ess: T,
) -> Result<DiscreteBayesNet<T>, BayesNetError> {
    if ess < T::zero() || !ess.is_finite() {
        return Err(BayesNetError::InvalidEss(ess.as_f64()));
    }
    let half = T::lit(0.5);
    let cpts = (0..g.n_nodes())
        .map(|v| {
            let (ones, totals) = bin.family_counts(v, g.parents(v));
            let p1 = ones
                .iter()
                .zip(&totals)
                .map(|(&k, &n)| {
                    let denom = T::from_usize_lossy(n as usize) + ess;
                    if denom > T::zero() {
                        (T::from_usize_lossy(k as usize) + ess * half) / denom
                    } else {
                        half
                    }
                })
                .collect();
            Cpt {
                node: g.label(v).to_string(),
                parents: g.parents(v).iter().map(|&p| g.label(p).to_string()).collect(),
                p1,
            }
        })
        .collect();
    Ok(DiscreteBayesNet { dag: g.clone(), cpts })
}

pub fn log_likelihood<T: Scalar>(bn: &DiscreteBayesNet<T>, data: &EventMatrix) -> Result<T, BayesNetError> {
    log_likelihood_with_floor(bn, data, T::lit(DEFAULT_LL_FLOOR))
}

/// Σ over rows and nodes of ln P(value | parents), each probability floored.
pub fn log_likelihood_with_floor<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    data: &EventMatrix,
    floor: T,
) -> Result<T, BayesNetError> {
    let bin = aligned_data(bn.dag(), data)?;
    let g = bn.dag();
    let mut total = T::zero();
    for v in 0..g.n_nodes() {
        let (ones, totals) = bin.family_counts(v, g.parents(v));
        for (cfg, (&k, &n)) in ones.iter().zip(&totals).enumerate() {
            let p = bn.cpts[v].p1[cfg];
            if k > 0 {
                total = total + T::from_usize_lossy(k as usize) * p.max(floor).ln();
            }
            if n > k {
                total = total + T::from_usize_lossy((n - k) as usize) * (T::one() - p).max(floor).ln();
            }
        }
    }
    Ok(total)
}
