//! Robustness checks that re-estimate an effect on perturbed data.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::estimate::{ace, nde, EffectEstimate, EstimandKind};
use super::CausalError;
use crate::bayesnet::{fit_cpts, Dag, DiscreteBayesNet};
use crate::dataset::{Cell, EventMatrix};
use crate::seed::derived_rng;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefutationKind {
    Placebo,
    Subset,
    RandomCommonCause,
}

impl RefutationKind {
    pub const ALL: [RefutationKind; 3] =
        [RefutationKind::Placebo, RefutationKind::Subset, RefutationKind::RandomCommonCause];

    fn tag(self) -> &'static str {
        match self {
            RefutationKind::Placebo => "placebo",
            RefutationKind::Subset => "subset",
            RefutationKind::RandomCommonCause => "random_common_cause",
        }
    }
}

impl fmt::Display for RefutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for RefutationKind {
    type Err = CausalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "placebo" => Ok(RefutationKind::Placebo),
            "subset" => Ok(RefutationKind::Subset),
            "random_common_cause" | "rcc" => Ok(RefutationKind::RandomCommonCause),
            _ => Err(CausalError::UnknownRefutation(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefutationResult {
    pub kind: RefutationKind,
    pub refuted_value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl RefutationResult {
    fn new(kind: RefutationKind, value: f64, refuted_value: f64, tolerance: f64) -> Self {
        let passed = match kind {
            RefutationKind::Placebo => refuted_value.abs() <= tolerance,
            RefutationKind::Subset | RefutationKind::RandomCommonCause => (refuted_value - value).abs() <= tolerance,
        };
        Self {
            kind,
            refuted_value,
            tolerance,
            passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefutationConfig {
    /// Prior strength used when refitting CPTs.
    pub ess: f64,
    pub placebo_tol: f64,
    pub subset_draws: usize,
    pub subset_frac: f64,
    pub subset_rel_tol: f64,
    pub subset_abs_tol: f64,
    pub rcc_tol: f64,
}

impl Default for RefutationConfig {
    fn default() -> Self {
        Self {
            ess: 1.0,
            placebo_tol: 0.05,
            subset_draws: 20,
            subset_frac: 0.8,
            subset_rel_tol: 0.1,
            subset_abs_tol: 0.02,
            rcc_tol: 0.05,
        }
    }
}

fn reestimate<T: Scalar>(bn: &DiscreteBayesNet<T>, est: &EffectEstimate) -> Result<f64, CausalError> {
    let (x, y) = (&est.query.treatment, &est.query.outcome);
    Ok(match est.kind {
        EstimandKind::Ace => ace(bn, x, y)?.value,
        EstimandKind::Nde => nde(bn, x, y)?.value,
    })
}

fn unique_label(m: &EventMatrix, base: &str) -> String {
    let mut label = base.to_string();
    let mut k = 1;
    while m.column_index(&label).is_ok() {
        label = format!("{base}_{k}");
        k += 1;
    }
    label
}

/// Re-estimates `estimate` after perturbing `data`; `bn` supplies the DAG.
pub fn refute<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    data: &EventMatrix,
    estimate: &EffectEstimate,
    kind: RefutationKind,
    cfg: &RefutationConfig,
    seed: u64,
) -> Result<RefutationResult, CausalError> {
    let g = bn.dag();
    let ess = T::lit(cfg.ess);
    let x = &estimate.query.treatment;
    let value = estimate.value;
    match kind {
        RefutationKind::Placebo => {
            let col = data.column_index(x)?;
            let n = data.n_rows();
            let ones = (0..n).filter(|&r| data.get(r, col) == Cell::One).count();
            let p = ones as f64 / n as f64;
            let mut rng = derived_rng(seed, "placebo", 0);
            let coins: Vec<bool> = (0..n).map(|_| rng.random_bool(p)).collect();
            let placebo = data.with_column_replaced(col, &coins);
            let refit = fit_cpts(g, &placebo, ess)?;
            let v = reestimate(&refit, estimate)?;
            Ok(RefutationResult::new(kind, value, v, cfg.placebo_tol))
        }
        RefutationKind::Subset => {
            let n = data.n_rows();
            let size = ((cfg.subset_frac * n as f64).ceil() as usize).clamp(1, n);
            let mut sum = 0.0;
            for k in 0..cfg.subset_draws.max(1) {
                let mut rng = derived_rng(seed, "subset", k as u64);
                let mut rows = sample(&mut rng, n, size).into_vec();
                rows.sort_unstable();
                let refit = fit_cpts(g, &data.select_rows(&rows)?, ess)?;
                sum += reestimate(&refit, estimate)?;
            }
            let mean = sum / cfg.subset_draws.max(1) as f64;
            let tol = cfg.subset_rel_tol * value.abs() + cfg.subset_abs_tol;
            Ok(RefutationResult::new(kind, value, mean, tol))
        }
        RefutationKind::RandomCommonCause => {
            let u = unique_label(data, "random_common_cause");
            let mut rng = derived_rng(seed, "random_common_cause", 0);
            let coins: Vec<bool> = (0..data.n_rows()).map(|_| rng.random_bool(0.5)).collect();
            let extended = data.with_column(&u, &coins)?;
            let mut nodes = g.nodes().to_vec();
            nodes.push(u.clone());
            let mut edges = g.edge_labels();
            edges.push((u.clone(), x.clone()));
            edges.push((u, estimate.query.outcome.clone()));
            let dag = Dag::new(nodes, &edges)?;
            let refit = fit_cpts(&dag, &extended, ess)?;
            let v = reestimate(&refit, estimate)?;
            Ok(RefutationResult::new(kind, value, v, cfg.rcc_tol))
        }
    }
}
