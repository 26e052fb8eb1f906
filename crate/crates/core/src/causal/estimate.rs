//! Exact interventional quantities on a fitted network.

use serde::{Deserialize, Serialize};

use super::CausalError;
use crate::bayesnet::{d_separated_idx, query_idx, BayesNetError, DiscreteBayesNet, InferenceMethod};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EstimandKind {
    Ace,
    Nde,
}

impl std::fmt::Display for EstimandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimandKind::Ace => "ACE",
            EstimandKind::Nde => "NDE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalQuery {
    pub treatment: String,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub query: CausalQuery,
    pub kind: EstimandKind,
    pub value: f64,
    pub adjustment_set: Vec<String>,
    pub mediators: Vec<String>,
    pub refutations: Vec<super::RefutationResult>,
}

fn indices<T: Scalar>(bn: &DiscreteBayesNet<T>, x: &str, y: &str) -> Result<(usize, usize), CausalError> {
    let g = bn.dag();
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    if xi == yi {
        return Err(CausalError::SameNode(x.to_string()));
    }
    Ok((xi, yi))
}

fn require_edge<T: Scalar>(bn: &DiscreteBayesNet<T>, x: usize, y: usize) -> Result<(), CausalError> {
    let g = bn.dag();
    if !g.has_edge(x, y) {
        return Err(CausalError::NotAnEdge {
            treatment: g.label(x).to_string(),
            outcome: g.label(y).to_string(),
        });
    }
    Ok(())
}

/// Parents of `x`, after checking the backdoor criterion for (x, y) on the graph.
pub fn backdoor_set(g: &crate::bayesnet::Dag, x: &str, y: &str) -> Result<Vec<String>, CausalError> {
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    if xi == yi {
        return Err(CausalError::SameNode(x.to_string()));
    }
    let z = backdoor_idx(g, xi, yi)?;
    Ok(z.iter().map(|&v| g.label(v).to_string()).collect())
}

pub(crate) fn backdoor_idx(g: &crate::bayesnet::Dag, x: usize, y: usize) -> Result<Vec<usize>, CausalError> {
    let z = g.parents(x).to_vec();
    let desc = g.descendants(x);
    let mut cut = g.clone();
    for c in g.children(x).to_vec() {
        cut.remove_edge(x, c);
    }
    if z.iter().any(|&v| desc[v]) || !d_separated_idx(&cut, x, y, &z) {
        return Err(CausalError::BackdoorViolation {
            treatment: g.label(x).to_string(),
            outcome: g.label(y).to_string(),
        });
    }
    Ok(z)
}

/// Nodes on some directed path x → … → y, endpoints excluded, in index order.
pub fn mediators(g: &crate::bayesnet::Dag, x: &str, y: &str) -> Result<Vec<String>, CausalError> {
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    Ok(mediators_idx(g, xi, yi).into_iter().map(|v| g.label(v).to_string()).collect())
}

pub(crate) fn mediators_idx(g: &crate::bayesnet::Dag, x: usize, y: usize) -> Vec<usize> {
    let from_x = g.descendants(x);
    let to_y = g.ancestors(y);
    (0..g.n_nodes()).filter(|&v| v != x && v != y && from_x[v] && to_y[v]).collect()
}

/// Assignments of `vars` in counting order, first variable most significant.
fn assignments(vars: &[usize]) -> impl Iterator<Item = Vec<(usize, bool)>> + '_ {
    (0..1usize << vars.len()).map(move |bits| {
        vars.iter()
            .enumerate()
            .map(|(i, &v)| (v, bits >> (vars.len() - 1 - i) & 1 == 1))
            .collect()
    })
}

/// P(y = 1 | x = v, evidence), falling back to the mutilated network when the
/// conditioning event has probability zero under the observational model.
fn conditional_outcome<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    x: usize,
    v: bool,
    y: usize,
    evidence: &[(usize, bool)],
) -> Result<T, CausalError> {
    let mut ev = evidence.to_vec();
    ev.push((x, v));
    match query_idx(bn, y, &ev, InferenceMethod::Auto) {
        Err(BayesNetError::ZeroProbabilityEvidence(_)) => {
            let cut = bn.with_root_cpt(x, if v { T::one() } else { T::zero() });
            Ok(query_idx(&cut, y, &ev, InferenceMethod::Auto)?)
        }
        other => Ok(other?),
    }
}

fn prob<T: Scalar>(bn: &DiscreteBayesNet<T>, evidence: &[(usize, bool)]) -> Result<T, CausalError> {
    Ok(crate::bayesnet::evidence_probability_idx(bn, evidence, InferenceMethod::Auto)?)
}

/// Backdoor adjustment over `z`.
pub(crate) fn ace_value<T: Scalar>(bn: &DiscreteBayesNet<T>, x: usize, y: usize, z: &[usize]) -> Result<T, CausalError> {
    let mut total = T::zero();
    for zz in assignments(z) {
        let pz = prob(bn, &zz)?;
        if pz <= T::zero() {
            continue;
        }
        let diff = conditional_outcome(bn, x, true, y, &zz)? - conditional_outcome(bn, x, false, y, &zz)?;
        total = total + diff * pz;
    }
    Ok(total)
}

/// Mediation formula with baseline x = 0.
pub(crate) fn nde_value<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    x: usize,
    y: usize,
    z: &[usize],
    m: &[usize],
) -> Result<T, CausalError> {
    let mut total = T::zero();
    for zz in assignments(z) {
        let pz = prob(bn, &zz)?;
        if pz <= T::zero() {
            continue;
        }
        let mut base = zz.clone();
        base.push((x, false));
        let p_base = prob(bn, &base)?;
        for mm in assignments(m) {
            let mut joint = base.clone();
            joint.extend_from_slice(&mm);
            // P(M = m | x = 0, Z = z), via the mutilated network when x = 0 is impossible given z
            let pm = if p_base > T::zero() {
                prob(bn, &joint)? / p_base
            } else {
                let cut = bn.with_root_cpt(x, T::zero());
                prob(&cut, &joint)? / prob(&cut, &base)?
            };
            if pm <= T::zero() {
                continue;
            }
            let mut ev = zz.clone();
            ev.extend_from_slice(&mm);
            let diff = conditional_outcome(bn, x, true, y, &ev)? - conditional_outcome(bn, x, false, y, &ev)?;
            total = total + diff * pm * pz;
        }
    }
    Ok(total)
}

/// Average causal effect of `x` on `y` along an edge of the network.
pub fn ace<T: Scalar>(bn: &DiscreteBayesNet<T>, x: &str, y: &str) -> Result<EffectEstimate, CausalError> {
    let (xi, yi) = indices(bn, x, y)?;
    require_edge(bn, xi, yi)?;
    let z = backdoor_idx(bn.dag(), xi, yi)?;
    let value = ace_value(bn, xi, yi, &z)?.as_f64();
    Ok(EffectEstimate {
        query: CausalQuery {
            treatment: x.to_string(),
            outcome: y.to_string(),
        },
        kind: EstimandKind::Ace,
        value,
        adjustment_set: labels(bn, &z),
        mediators: Vec::new(),
        refutations: Vec::new(),
    })
}

/// P(y=1 | do(x=1)) − P(y=1 | do(x=0)) by truncated factorisation.
pub fn ace_surgery<T: Scalar>(bn: &DiscreteBayesNet<T>, x: &str, y: &str) -> Result<T, CausalError> {
    let g = bn.dag();
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    let p = |v: T| -> Result<T, CausalError> { Ok(query_idx(&bn.with_root_cpt(xi, v), yi, &[], InferenceMethod::Auto)?) };
    Ok(p(T::one())? - p(T::zero())?)
}

/// Natural direct effect; errors when no mediator exists.
pub fn nde<T: Scalar>(bn: &DiscreteBayesNet<T>, x: &str, y: &str) -> Result<EffectEstimate, CausalError> {
    let (xi, yi) = indices(bn, x, y)?;
    require_edge(bn, xi, yi)?;
    let m = mediators_idx(bn.dag(), xi, yi);
    if m.is_empty() {
        return Err(CausalError::NoMediators {
            treatment: x.to_string(),
            outcome: y.to_string(),
        });
    }
    let z = backdoor_idx(bn.dag(), xi, yi)?;
    let value = nde_value(bn, xi, yi, &z, &m)?.as_f64();
    Ok(EffectEstimate {
        query: CausalQuery {
            treatment: x.to_string(),
            outcome: y.to_string(),
        },
        kind: EstimandKind::Nde,
        value,
        adjustment_set: labels(bn, &z),
        mediators: labels(bn, &m),
        refutations: Vec::new(),
    })
}

/// The mediation formula with an explicit mediator set (which may be empty).
pub fn nde_with_mediators<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    x: &str,
    y: &str,
    mediators: &[&str],
) -> Result<T, CausalError> {
    let (xi, yi) = indices(bn, x, y)?;
    let z = backdoor_idx(bn.dag(), xi, yi)?;
    let m = mediators
        .iter()
        .map(|l| bn.dag().index_of(l))
        .collect::<Result<Vec<_>, _>>()?;
    nde_value(bn, xi, yi, &z, &m)
}

/// NDE when the edge has mediators, ACE otherwise.
pub fn estimate<T: Scalar>(bn: &DiscreteBayesNet<T>, x: &str, y: &str) -> Result<EffectEstimate, CausalError> {
    let (xi, yi) = indices(bn, x, y)?;
    if mediators_idx(bn.dag(), xi, yi).is_empty() {
        ace(bn, x, y)
    } else {
        nde(bn, x, y)
    }
}

fn labels<T: Scalar>(bn: &DiscreteBayesNet<T>, v: &[usize]) -> Vec<String> {
    v.iter().map(|&i| bn.dag().label(i).to_string()).collect()
}
