//! Chronology trees, the frequency baseline, model comparison,
//! falsification and cross-model consensus.

mod baseline;
mod compare;
mod falsify;
mod tree;

use thiserror::Error;

pub use baseline::{deterministic_chronology, BaselineChronology, PairTest, RemovedEdge};
pub use compare::{compare_models, consensus_edges, write_scores_csv, ConsensusSummary, EdgeCount, ModelScore};
pub use falsify::{falsify, FalsificationVerdict, FalsifyConfig, PermutationReference};
pub use tree::{build_chronology, strong_causal_relations, ChronologyTree, TreeEdge};

use crate::bayesnet::BayesNetError;
use crate::dataset::DatasetError;
use crate::discovery::DiscoveryError;

#[derive(Debug, Error)]
pub enum ChronologyError {
    #[error(transparent)]
    Graph(#[from] BayesNetError),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Test(#[from] DiscoveryError),
    #[error("strong relation {0:?} -> {1:?} is not an edge of the graph")]
    NotAnEdge(String, String),
    #[error("more than one strong relation into {0:?}")]
    DuplicateOutcome(String),
    #[error("need at least 2 events, got {0}")]
    TooFewEvents(usize),
    #[error("model {0:?} does not cover exactly the data columns")]
    ModelMismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
}
