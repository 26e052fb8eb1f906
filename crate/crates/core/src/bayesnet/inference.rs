//! Exact inference: joint enumeration for small networks, variable
//! elimination (min-fill order) otherwise. Both prune to the ancestral
//! closure of the query and evidence variables first.

use std::collections::BTreeSet;

use super::{BayesNetError, DiscreteBayesNet};
use crate::Scalar;

/// Above this many relevant nodes, `Auto` switches to variable elimination.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InferenceMethod {
    #[default]
    Auto,
    Enumeration,
    VariableElimination,
}

/// P(target = 1 | evidence).
pub fn query<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    target: &str,
    evidence: &[(&str, bool)],
) -> Result<T, BayesNetError> {
    query_with(bn, target, evidence, InferenceMethod::Auto)
}

pub fn query_with<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    target: &str,
    evidence: &[(&str, bool)],
    method: InferenceMethod,
) -> Result<T, BayesNetError> {
    let t = bn.dag().index_of(target)?;
    let ev = evidence
        .iter()
        .map(|(l, v)| Ok((bn.dag().index_of(l)?, *v)))
        .collect::<Result<Vec<_>, BayesNetError>>()?;
    query_idx(bn, t, &ev, method)
}

/// Index-based [`query`].
pub fn query_idx<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    target: usize,
    evidence: &[(usize, bool)],
    method: InferenceMethod,
) -> Result<T, BayesNetError> {
    let mut with_target = evidence.to_vec();
    with_target.push((target, true));
    let pe = evidence_probability_idx(bn, evidence, method)?;
    if pe <= T::zero() {
        return Err(zero_evidence(bn, evidence));
    }
    let joint = evidence_probability_idx(bn, &with_target, method)?;
    Ok((joint / pe).min(T::one()).max(T::zero()))
}

/// P(evidence); 0 for contradictory evidence.
pub fn evidence_probability_idx<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    evidence: &[(usize, bool)],
    method: InferenceMethod,
) -> Result<T, BayesNetError> {
    let mut fixed: Vec<Option<bool>> = vec![None; bn.dag().n_nodes()];
    for &(v, val) in evidence {
        match fixed[v] {
            Some(prev) if prev != val => return Ok(T::zero()),
            _ => fixed[v] = Some(val),
        }
    }
    let relevant = ancestral_closure(bn, evidence.iter().map(|&(v, _)| v));
    let use_enum = match method {
        InferenceMethod::Enumeration => true,
        InferenceMethod::VariableElimination => false,
        InferenceMethod::Auto => relevant.len() <= ENUMERATION_LIMIT,
    };
    if use_enum {
        Ok(enumerate(bn, &relevant, &fixed))
    } else {
        Ok(eliminate(bn, &relevant, &fixed))
    }
}

fn zero_evidence<T: Scalar>(bn: &DiscreteBayesNet<T>, evidence: &[(usize, bool)]) -> BayesNetError {
    BayesNetError::ZeroProbabilityEvidence(
        evidence
            .iter()
            .map(|&(v, b)| format!("{}={}", bn.dag().label(v), u8::from(b)))
            .collect::<Vec<_>>()
            .join(","),
    )
}

fn ancestral_closure<T: Scalar>(bn: &DiscreteBayesNet<T>, seeds: impl Iterator<Item = usize>) -> Vec<usize> {
    let g = bn.dag();
    let mut keep = vec![false; g.n_nodes()];
    let mut stack: Vec<usize> = seeds.collect();
    while let Some(v) = stack.pop() {
        if !keep[v] {
            keep[v] = true;
            stack.extend_from_slice(g.parents(v));
        }
    }
    (0..g.n_nodes()).filter(|&v| keep[v]).collect()
}

fn enumerate<T: Scalar>(bn: &DiscreteBayesNet<T>, relevant: &[usize], fixed: &[Option<bool>]) -> T {
    let free: Vec<usize> = relevant.iter().copied().filter(|&v| fixed[v].is_none()).collect();
    let mut assignment: Vec<bool> = fixed.iter().map(|f| f.unwrap_or(false)).collect();
    let mut total = T::zero();
    for state in 0u64..(1u64 << free.len()) {
        for (i, &v) in free.iter().enumerate() {
            assignment[v] = (state >> i) & 1 == 1;
        }
        let mut p = T::one();
        for &v in relevant {
            p = p * bn.p_given(v, assignment[v], &assignment);
            if p == T::zero() {
                break;
            }
        }
        total = total + p;
    }
    total
}

/// Table over `vars` (sorted); bit `i` of an index is the value of `vars[i]`.
#[derive(Clone, Debug)]
struct Factor<T> {
    vars: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Factor<T> {
    fn from_cpt(bn: &DiscreteBayesNet<T>, v: usize) -> Self {
        let mut vars: Vec<usize> = bn.dag().parents(v).to_vec();
        vars.push(v);
        vars.sort_unstable();
        let mut assignment = vec![false; bn.dag().n_nodes()];
        let values = (0..1usize << vars.len())
            .map(|idx| {
                for (i, &u) in vars.iter().enumerate() {
                    assignment[u] = (idx >> i) & 1 == 1;
                }
                bn.p_given(v, assignment[v], &assignment)
            })
            .collect();
        Self { vars, values }
    }

    fn reduce(&self, var: usize, value: bool) -> Self {
        let Some(pos) = self.vars.iter().position(|&u| u == var) else {
            return self.clone();
        };
        let vars: Vec<usize> = self.vars.iter().copied().filter(|&u| u != var).collect();
        let values = (0..1usize << vars.len())
            .map(|idx| self.values[insert_bit(idx, pos, value)])
            .collect();
        Self { vars, values }
    }

    fn product(&self, other: &Self) -> Self {
        let vars: Vec<usize> = self
            .vars
            .iter()
            .chain(&other.vars)
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos_a: Vec<usize> = self.vars.iter().map(|u| vars.binary_search(u).unwrap()).collect();
        let pos_b: Vec<usize> = other.vars.iter().map(|u| vars.binary_search(u).unwrap()).collect();
        let values = (0..1usize << vars.len())
            .map(|idx| {
                let ia = gather(idx, &pos_a);
                let ib = gather(idx, &pos_b);
                self.values[ia] * other.values[ib]
            })
            .collect();
        Self { vars, values }
    }

    fn sum_out(&self, var: usize) -> Self {
        let pos = self.vars.iter().position(|&u| u == var).expect("variable in scope");
        let vars: Vec<usize> = self.vars.iter().copied().filter(|&u| u != var).collect();
        let values = (0..1usize << vars.len())
            .map(|idx| self.values[insert_bit(idx, pos, false)] + self.values[insert_bit(idx, pos, true)])
            .collect();
        Self { vars, values }
    }
}

fn insert_bit(idx: usize, pos: usize, value: bool) -> usize {
    let low = idx & ((1 << pos) - 1);
    let high = idx >> pos;
    (high << (pos + 1)) | (usize::from(value) << pos) | low
}

fn gather(idx: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &p)| acc | (((idx >> p) & 1) << i))
}

fn eliminate<T: Scalar>(bn: &DiscreteBayesNet<T>, relevant: &[usize], fixed: &[Option<bool>]) -> T {
    let mut factors: Vec<Factor<T>> = relevant
        .iter()
        .map(|&v| {
            let mut f = Factor::from_cpt(bn, v);
            for u in f.vars.clone() {
                if let Some(val) = fixed[u] {
                    f = f.reduce(u, val);
                }
            }
            f
        })
        .collect();
    let mut remaining: BTreeSet<usize> = relevant.iter().copied().filter(|&v| fixed[v].is_none()).collect();
    while let Some(var) = min_fill_choice(&factors, &remaining) {
        remaining.remove(&var);
        let (touching, rest): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        if let Some(first) = touching.first() {
            let prod = touching[1..].iter().fold(first.clone(), |acc, f| acc.product(f));
            factors.push(prod.sum_out(var));
        }
    }
    factors
        .iter()
        .map(|f| f.values[0])
        .fold(T::one(), |acc, v| acc * v)
}

fn min_fill_choice<T>(factors: &[Factor<T>], remaining: &BTreeSet<usize>) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for &v in remaining {
        let neighbours: BTreeSet<usize> = factors
            .iter()
            .filter(|f| f.vars.contains(&v))
            .flat_map(|f| f.vars.iter().copied())
            .filter(|&u| u != v)
            .collect();
        let nb: Vec<usize> = neighbours.into_iter().collect();
        let mut fill = 0;
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                let linked = factors
                    .iter()
                    .any(|f| f.vars.contains(&nb[i]) && f.vars.contains(&nb[j]));
                if !linked {
                    fill += 1;
                }
            }
        }
        if best.is_none_or(|(b, _)| fill < b) {
            best = Some((fill, v));
        }
    }
    best.map(|(_, v)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::{Cpt, Dag};
    use approx::assert_abs_diff_eq;

    fn chain() -> DiscreteBayesNet<f64> {
        let g = Dag::new(vec!["A".into(), "B".into()], &[("A", "B")]).unwrap();
        DiscreteBayesNet::new(
            g,
            vec![
                Cpt::new("A", vec![], vec![0.5]).unwrap(),
                Cpt::new("B", vec!["A".into()], vec![0.2, 0.9]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn hand_marginalised_chain() {
        let bn = chain();
        for m in [InferenceMethod::Enumeration, InferenceMethod::VariableElimination] {
            assert_abs_diff_eq!(query_with(&bn, "B", &[], m).unwrap(), 0.55, epsilon = 1e-15);
            assert_abs_diff_eq!(query_with(&bn, "A", &[], m).unwrap(), 0.5, epsilon = 1e-15);
            // Bayes: 0.45 / 0.55
            assert_abs_diff_eq!(
                query_with(&bn, "A", &[("B", true)], m).unwrap(),
                0.45 / 0.55,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn self_evidence_is_degenerate() {
        let bn = chain();
        assert_eq!(query(&bn, "B", &[("B", true)]).unwrap(), 1.0);
        assert_eq!(query(&bn, "B", &[("B", false)]).unwrap(), 0.0);
    }

    #[test]
    fn zero_probability_evidence_is_reported() {
        let g = Dag::new(vec!["A".into(), "B".into()], &[("A", "B")]).unwrap();
        let bn = DiscreteBayesNet::new(
            g,
            vec![
                Cpt::new("A", vec![], vec![1.0f64]).unwrap(),
                Cpt::new("B", vec!["A".into()], vec![0.2, 0.9]).unwrap(),
            ],
        )
        .unwrap();
        for m in [InferenceMethod::Enumeration, InferenceMethod::VariableElimination] {
            let err = query_with(&bn, "B", &[("A", false)], m).unwrap_err();
            assert!(matches!(err, BayesNetError::ZeroProbabilityEvidence(_)));
        }
    }

    #[test]
    fn bit_helpers() {
        assert_eq!(insert_bit(0b11, 1, false), 0b101);
        assert_eq!(insert_bit(0b11, 0, false), 0b110);
        assert_eq!(gather(0b1010, &[1, 3]), 0b11);
    }
}
