//! Causal chronologies of binary events from incomplete observation matrices.
//!
//! The pipeline runs: load a ternary reads × events matrix, impute missing
//! cells jointly with a Bayesian network (EM), learn structures with several
//! discovery algorithms, estimate interventional effects on the fitted
//! networks, and reduce every structure to a chronology tree that can be
//! scored and falsified against the data.
//!
//! Numeric code is generic over [`Scalar`] (`f32` / `f64`); the aliases
//! below fix the `f64` instantiation used by the pipeline.

pub mod bayesnet;
pub mod causal;
pub mod chronology;
pub mod dataset;
pub mod discovery;
pub mod imputation;
pub mod pipeline;
pub mod scalar;
pub mod scenario;
pub mod seed;

pub use scalar::Scalar;

/// `f64` Bayesian network.
pub type BayesNet = bayesnet::DiscreteBayesNet<f64>;
/// `f64` conditional probability table.
pub type Cpt = bayesnet::Cpt<f64>;
/// `f64` weighted adjacency from NOTEARS.
pub type Adjacency = discovery::WeightedAdjacency<f64>;
