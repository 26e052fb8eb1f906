//! Permutation test of a DAG's local Markov statements against data.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ChronologyError;
use crate::bayesnet::{local_markov_statements, Dag};
use crate::dataset::EventMatrix;
use crate::discovery::g2_binary;
use crate::seed::derived_rng;

/// Which permuted graphs form the reference distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationReference {
    /// Uniform over permutations whose statement set differs from the graph's.
    #[default]
    NonEquivalent,
    /// Uniform over all permutations.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FalsifyConfig {
    pub n_perm: usize,
    pub alpha_ci: f64,
    pub alpha_f: f64,
    pub reference: PermutationReference,
    /// Cap on permutations drawn while looking for non-equivalent ones.
    pub max_draws: usize,
}

impl Default for FalsifyConfig {
    fn default() -> Self {
        Self {
            n_perm: 20,
            alpha_ci: 0.05,
            alpha_f: 0.05,
            reference: PermutationReference::NonEquivalent,
            max_draws: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsificationVerdict {
    pub falsifiable: bool,
    pub falsified: bool,
    /// Statements of the graph rejected by the data.
    pub v_given: usize,
    pub n_statements: usize,
    /// Rejected statements per reference permutation.
    pub baseline: Vec<usize>,
    pub p_value: f64,
    /// Share of drawn permutations implying the same statements as the graph.
    pub equivalent_fraction: f64,
}

/// Statement as (x, y, z) node indices with x < y and z sorted.
type Key = (usize, usize, Vec<usize>);

fn statement_keys(g: &Dag) -> BTreeSet<Key> {
    local_markov_statements(g)
        .into_iter()
        .map(|s| {
            let x = g.index_of(&s.x).expect("statement labels are nodes");
            let y = g.index_of(&s.y).expect("statement labels are nodes");
            let mut z: Vec<usize> = s.z.iter().map(|l| g.index_of(l).expect("node")).collect();
            z.sort_unstable();
            (x.min(y), x.max(y), z)
        })
        .collect()
}

pub fn falsify(g: &Dag, data: &EventMatrix, cfg: &FalsifyConfig, seed: u64) -> Result<FalsificationVerdict, ChronologyError> {
    let cols = data.select_columns(g.nodes())?;
    let bin = cols.to_binary()?;
    let own = statement_keys(g);
    let d = g.n_nodes();

    let mut rng = derived_rng(seed, "falsify", 0);
    let mut perm: Vec<usize> = (0..d).collect();
    let mut reference: Vec<BTreeSet<Key>> = Vec::new();
    let (mut drawn, mut equivalent) = (0usize, 0usize);
    let cap = cfg.max_draws.max(cfg.n_perm);
    while reference.len() < cfg.n_perm && drawn < cap {
        perm.shuffle(&mut rng);
        drawn += 1;
        let permuted = g.permuted(&perm);
        let keys = statement_keys(&permuted);
        equivalent += usize::from(keys == own);
        if cfg.reference == PermutationReference::Uniform || !permuted.markov_equivalent(g) {
            reference.push(keys);
        }
    }

    let mut unique: BTreeSet<&Key> = own.iter().collect();
    for keys in &reference {
        unique.extend(keys.iter());
    }
    let unique: Vec<&Key> = unique.into_iter().collect();
    let rejected: HashMap<&Key, bool> = unique
        .par_iter()
        .map(|&k| (k, g2_binary(&bin, k.0, k.1, &k.2).p_value < cfg.alpha_ci))
        .collect();
    let violations = |keys: &BTreeSet<Key>| keys.iter().filter(|k| rejected[k]).count();

    let v_given = violations(&own);
    let baseline: Vec<usize> = reference.iter().map(violations).collect();
    let at_most = baseline.iter().filter(|&&v| v <= v_given).count();
    let p_value = (1 + at_most) as f64 / (baseline.len() + 1) as f64;
    let equivalent_fraction = if drawn == 0 { 1.0 } else { equivalent as f64 / drawn as f64 };
    let n_statements = own.len();
    Ok(FalsificationVerdict {
        falsifiable: n_statements > 0 && equivalent_fraction <= 0.5,
        falsified: n_statements > 0 && (p_value >= cfg.alpha_f || v_given == n_statements),
        v_given,
        n_statements,
        baseline,
        p_value,
        equivalent_fraction,
    })
}
