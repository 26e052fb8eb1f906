//! Per-edge effect table with CSV/JSON export.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{ace, estimate, EstimandKind};
use super::refute::{refute, RefutationConfig, RefutationKind};
use super::CausalError;
use crate::bayesnet::DiscreteBayesNet;
use crate::dataset::EventMatrix;
use crate::seed::derive_seed;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalRelation {
    pub treatment: String,
    pub outcome: String,
    pub kind: EstimandKind,
    pub value: f64,
    pub adjustment_set: Vec<String>,
    pub mediators: Vec<String>,
    /// Strictly positive effect.
    pub validated: bool,
    pub placebo_pass: Option<bool>,
    pub subset_pass: Option<bool>,
    pub rcc_pass: Option<bool>,
    /// Total effect; differs from `value` for NDE rows.
    pub total_effect: Option<f64>,
    /// Natural indirect effect, total minus NDE (derived, not estimated separately).
    pub nie: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CausalRelationTable {
    pub rows: Vec<CausalRelation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectsConfig {
    pub refute: bool,
    pub refutation: RefutationConfig,
}

impl Default for EffectsConfig {
    fn default() -> Self {
        Self {
            refute: true,
            refutation: RefutationConfig::default(),
        }
    }
}

fn relation_for_edge<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    data: &EventMatrix,
    x: &str,
    y: &str,
    edge_index: usize,
    cfg: &EffectsConfig,
    seed: u64,
) -> Result<CausalRelation, CausalError> {
    let mut est = estimate(bn, x, y)?;
    let total = match est.kind {
        EstimandKind::Ace => est.value,
        EstimandKind::Nde => ace(bn, x, y)?.value,
    };
    let mut passes = [None; 3];
    if cfg.refute {
        for (slot, kind) in RefutationKind::ALL.into_iter().enumerate() {
            let s = derive_seed(seed, &format!("refute:{kind}"), edge_index as u64);
            let r = refute(bn, data, &est, kind, &cfg.refutation, s)?;
            passes[slot] = Some(r.passed);
            est.refutations.push(r);
        }
    }
    Ok(CausalRelation {
        treatment: x.to_string(),
        outcome: y.to_string(),
        kind: est.kind,
        value: est.value,
        adjustment_set: est.adjustment_set,
        mediators: est.mediators,
        validated: est.value > 0.0,
        placebo_pass: passes[0],
        subset_pass: passes[1],
        rcc_pass: passes[2],
        total_effect: Some(total),
        nie: (est.kind == EstimandKind::Nde).then(|| total - est.value),
        error: None,
    })
}

/// One row per edge of the network, sorted by decreasing value.
pub fn effects_for_dag<T: Scalar>(
    bn: &DiscreteBayesNet<T>,
    data: &EventMatrix,
    cfg: &EffectsConfig,
    seed: u64,
) -> CausalRelationTable {
    let edges = bn.dag().edge_labels();
    let mut rows: Vec<CausalRelation> = edges
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            relation_for_edge(bn, data, x, y, i, cfg, seed).unwrap_or_else(|e| CausalRelation {
                treatment: x.clone(),
                outcome: y.clone(),
                kind: EstimandKind::Ace,
                value: f64::NAN,
                adjustment_set: Vec::new(),
                mediators: Vec::new(),
                validated: false,
                placebo_pass: None,
                subset_pass: None,
                rcc_pass: None,
                total_effect: None,
                nie: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &CausalRelation| if r.value.is_nan() { f64::NEG_INFINITY } else { r.value };
        key(b).total_cmp(&key(a))
    });
    CausalRelationTable { rows }
}

const HEADER: [&str; 13] = [
    "treatment",
    "outcome",
    "kind",
    "value",
    "adjustment_set",
    "mediators",
    "validated",
    "placebo_pass",
    "subset_pass",
    "rcc_pass",
    "total_effect",
    "nie",
    "error",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn parse_opt<T: std::str::FromStr>(s: &str, row: usize, col: &str) -> Result<Option<T>, CausalError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| CausalError::TableParse {
        row,
        message: format!("bad {col} value {s:?}"),
    })
}

fn split_set(s: &str) -> Vec<String> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split(';').map(str::to_string).collect()
    }
}

impl CausalRelationTable {
    pub fn validated(&self) -> impl Iterator<Item = &CausalRelation> {
        self.rows.iter().filter(|r| r.validated)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), CausalError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(HEADER).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.treatment.clone(),
                r.outcome.clone(),
                r.kind.to_string(),
                r.value.to_string(),
                r.adjustment_set.join(";"),
                r.mediators.join(";"),
                r.validated.to_string(),
                opt(&r.placebo_pass),
                opt(&r.subset_pass),
                opt(&r.rcc_pass),
                opt(&r.total_effect),
                opt(&r.nie),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| CausalError::Io(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv(reader: impl Read) -> Result<Self, CausalError> {
        let mut rd = csv::Reader::from_reader(reader);
        let header = rd.headers().map_err(csv_error)?.clone();
        let col = |name: &str| {
            header.iter().position(|h| h == name).ok_or_else(|| CausalError::TableParse {
                row: 0,
                message: format!("missing column {name:?}"),
            })
        };
        let idx: Vec<usize> = HEADER[..7].iter().map(|h| col(h)).collect::<Result<_, _>>()?;
        let optional = |name: &str| header.iter().position(|h| h == name);
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_error)?;
            let row = i + 1;
            let get = |k: usize| rec.get(idx[k]).unwrap_or("");
            let get_opt = |name: &str| optional(name).and_then(|c| rec.get(c)).unwrap_or("");
            let kind = match get(2) {
                "ACE" => EstimandKind::Ace,
                "NDE" => EstimandKind::Nde,
                other => {
                    return Err(CausalError::TableParse {
                        row,
                        message: format!("unknown kind {other:?}"),
                    })
                }
            };
            rows.push(CausalRelation {
                treatment: get(0).to_string(),
                outcome: get(1).to_string(),
                kind,
                value: parse_opt(get(3), row, "value")?.unwrap_or(f64::NAN),
                adjustment_set: split_set(get(4)),
                mediators: split_set(get(5)),
                validated: parse_opt(get(6), row, "validated")?.unwrap_or(false),
                placebo_pass: parse_opt(get_opt("placebo_pass"), row, "placebo_pass")?,
                subset_pass: parse_opt(get_opt("subset_pass"), row, "subset_pass")?,
                rcc_pass: parse_opt(get_opt("rcc_pass"), row, "rcc_pass")?,
                total_effect: parse_opt(get_opt("total_effect"), row, "total_effect")?,
                nie: parse_opt(get_opt("nie"), row, "nie")?,
                error: Some(get_opt("error").to_string()).filter(|s| !s.is_empty()),
            });
        }
        Ok(Self { rows })
    }
}

fn csv_error(e: csv::Error) -> CausalError {
    CausalError::Io(e.to_string())
}
