//! Structure learning: hill climbing, PC, direct LiNGAM, NOTEARS and
//! stability selection, plus the independence tests they rely on.

mod continuous;
mod hc;
mod independence;
mod lingam;
pub mod matrix;
mod notears;
pub mod optim;
mod pc;
mod stability;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use continuous::ContinuousData;
pub use hc::{hc_learn, HcConfig, HcResult};
pub use independence::{
    adjust_p_values, ci_test_g2, fisher_exact, CiTestResult, Correction, MIN_STRATUM_ROWS,
};
pub(crate) use independence::g2_binary;
pub use lingam::{lingam_learn, LingamConfig, LingamResult};
pub use matrix::SquareMatrix;
pub use notears::{
    acyclicity_h, notears_from_covariance, notears_learn, NotearsConfig, NotearsFit, WeightedAdjacency,
};
pub use pc::{pc_learn, PcConfig, PcResult};
pub use stability::{log_grid, stability_select, EdgeFrequency, StabilityConfig, StabilityReport};

use crate::bayesnet::{BayesNetError, Dag};
use crate::dataset::{DatasetError, EventMatrix};

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Graph(#[from] BayesNetError),
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("x, y and the conditioning set must be distinct")]
    InvalidTest,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("data contain non-finite values")]
    NonFinite,
    #[error("NOTEARS did not reach the acyclicity tolerance (h = {h:e})")]
    NotearsNotConverged { h: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown algorithm '{0}'")]
    UnknownAlgorithm(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Hc,
    Pc,
    Lingam,
    Notears,
    NotearsStability,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Hc,
        Algorithm::Pc,
        Algorithm::Lingam,
        Algorithm::Notears,
        Algorithm::NotearsStability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hc => "hc",
            Algorithm::Pc => "pc",
            Algorithm::Lingam => "lingam",
            Algorithm::Notears => "notears",
            Algorithm::NotearsStability => "notears-stability",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = DiscoveryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| DiscoveryError::UnknownAlgorithm(s.to_string()))
    }
}

/// Settings for every learner; only the selected algorithm's block is used.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub hc: HcConfig,
    pub pc: PcConfig,
    pub lingam: LingamConfig,
    pub notears: NotearsConfig,
    pub stability: StabilityConfig,
}

#[derive(Clone, Debug)]
pub struct Learned {
    pub algorithm: Algorithm,
    pub dag: Dag,
    /// PC edges whose direction came from column order alone.
    pub order_forced: Vec<(String, String)>,
    pub weights: Option<WeightedAdjacency<f64>>,
    pub stability: Option<StabilityReport>,
}

/// Runs one learner on complete binary data.
pub fn learn(
    data: &EventMatrix,
    algorithm: Algorithm,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<Learned, DiscoveryError> {
    let binary = data.to_binary()?;
    let mut out = Learned {
        algorithm,
        dag: Dag::empty(data.columns().to_vec())?,
        order_forced: Vec::new(),
        weights: None,
        stability: None,
    };
    match algorithm {
        Algorithm::Hc => out.dag = hc_learn(&binary, &cfg.hc).dag,
        Algorithm::Pc => {
            let r = pc_learn(&binary, &cfg.pc);
            out.order_forced = r
                .order_forced
                .iter()
                .map(|&(a, b)| (r.dag.label(a).to_string(), r.dag.label(b).to_string()))
                .collect();
            out.dag = r.dag;
        }
        Algorithm::Lingam => {
            out.dag = lingam_learn(&ContinuousData::from_binary(&binary), &cfg.lingam).dag;
        }
        Algorithm::Notears => {
            let fit = notears_learn(&ContinuousData::<f64>::from_binary(&binary), &cfg.notears)?;
            out.dag = fit.dag;
            out.weights = Some(fit.weights);
        }
        Algorithm::NotearsStability => {
            let cont = ContinuousData::<f64>::from_binary(&binary);
            let (dag, report) = stability_select(&cont, &cfg.stability, seed)?;
            out.dag = dag;
            out.stability = Some(report);
        }
    }
    Ok(out)
}
