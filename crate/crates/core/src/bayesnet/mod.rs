//! DAGs and discrete Bayesian networks over binary events.

mod dag;
mod dsep;
mod inference;
mod network;
mod sample;
mod score;

use thiserror::Error;

pub use dag::{topological_levels, Dag};
pub(crate) use dag::escape;
pub use dsep::{d_separated, d_separated_idx, local_markov_statements, CiStatement};
pub use inference::{evidence_probability_idx, query, query_idx, query_with, InferenceMethod, ENUMERATION_LIMIT};
pub use network::{
    fit_cpts, log_likelihood, log_likelihood_with_floor, Cpt, CptJson, DiscreteBayesNet, NetworkJson,
    DEFAULT_LL_FLOOR,
};
pub use sample::sample;
pub use score::{bic_score, local_bic, local_log_likelihood, ml_log_likelihood};

use crate::dataset::DatasetError;

#[derive(Debug, Error)]
pub enum BayesNetError {
    #[error("unknown node {0:?}")]
    UnknownLabel(String),
    #[error("duplicate node {0:?}")]
    DuplicateLabel(String),
    #[error("empty node label")]
    EmptyLabel,
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("edge {from:?} -> {to:?} would create a directed cycle")]
    Cycle { from: String, to: String },
    #[error("node sets differ")]
    NodeSetMismatch,
    #[error("node {0:?} is absent from the data")]
    NodeAbsent(String),
    #[error("CPT of {node:?} needs {expected} entries, found {found}")]
    CptShape { node: String, expected: usize, found: usize },
    #[error("CPT of {node:?} holds {value}, outside [0, 1]")]
    InvalidProbability { node: String, value: f64 },
    #[error("CPT parents of {0:?} differ from the DAG")]
    ParentMismatch(String),
    #[error("no CPT for node {0:?}")]
    MissingCpt(String),
    #[error("equivalent sample size must be finite and non-negative, got {0}")]
    InvalidEss(f64),
    #[error("evidence {0} has probability zero")]
    ZeroProbabilityEvidence(String),
    #[error("d-separation query needs distinct x, y outside the conditioning set")]
    InvalidCiQuery,
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Data(#[from] DatasetError),
}
