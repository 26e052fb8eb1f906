//! Interventional effects on fitted networks: backdoor identification,
//! exact ACE/NDE, refutations, and the per-edge relation table.

mod estimate;
mod refute;
mod table;

use thiserror::Error;

pub use estimate::{
    ace, ace_surgery, backdoor_set, estimate, mediators, nde, nde_with_mediators, CausalQuery, EffectEstimate,
    EstimandKind,
};
pub use refute::{refute, RefutationConfig, RefutationKind, RefutationResult};
pub use table::{effects_for_dag, CausalRelation, CausalRelationTable, EffectsConfig};

use crate::bayesnet::BayesNetError;
use crate::dataset::DatasetError;

#[derive(Debug, Error)]
pub enum CausalError {
    #[error(transparent)]
    Graph(#[from] BayesNetError),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error("treatment and outcome are both {0:?}")]
    SameNode(String),
    #[error("{treatment:?} -> {outcome:?} is not an edge of the network")]
    NotAnEdge { treatment: String, outcome: String },
    #[error("no mediators between {treatment:?} and {outcome:?}; use the ACE")]
    NoMediators { treatment: String, outcome: String },
    #[error("parents of {treatment:?} fail the backdoor criterion for {outcome:?}")]
    BackdoorViolation { treatment: String, outcome: String },
    #[error("unknown refutation '{0}'")]
    UnknownRefutation(String),
    #[error("relation table row {row}: {message}")]
    TableParse { row: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}
