//! Synthetic scenarios: named generating networks, sampling, and per-row
//! single-block missingness, with a ground-truth sidecar.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayesnet::{sample, BayesNetError, Cpt, Dag, DiscreteBayesNet, NetworkJson};
use crate::causal::ace_surgery;
use crate::dataset::{Cell, EventMatrix};
use crate::seed::{derive_seed, derived_rng};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] BayesNetError),
}

/// Named generating networks.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// x0 → x1 → … with P(child=1 | parent=1) = 0.9 and 0.1 otherwise.
    Chain(usize),
    Fork,
    Collider,
    Diamond,
    /// Random DAG over `d` nodes, each forward pair an edge with probability `p`.
    Random(usize, f64),
    /// 12 events; synthetic network with the ndhB dataset's dimensions.
    NdhB,
    /// 5 events; synthetic network with the ndhD dataset's dimensions.
    NdhD,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Chain(5) => f.write_str("chain"),
            Preset::Chain(d) => write!(f, "chain-{d}"),
            Preset::Fork => f.write_str("fork"),
            Preset::Collider => f.write_str("collider"),
            Preset::Diamond => f.write_str("diamond"),
            Preset::Random(d, p) => write!(f, "random-{d}-{p}"),
            Preset::NdhB => f.write_str("ndhB"),
            Preset::NdhD => f.write_str("ndhD"),
        }
    }
}

impl FromStr for Preset {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScenarioError::UnknownPreset(s.to_string());
        let parts: Vec<&str> = s.split('-').collect();
        let preset = match parts.as_slice() {
            ["chain"] => Preset::Chain(5),
            ["chain", d] => Preset::Chain(d.parse().map_err(|_| bad())?),
            ["fork"] => Preset::Fork,
            ["collider"] => Preset::Collider,
            ["diamond"] => Preset::Diamond,
            ["random", d, p] => Preset::Random(d.parse().map_err(|_| bad())?, p.parse().map_err(|_| bad())?),
            ["ndhB"] => Preset::NdhB,
            ["ndhD"] => Preset::NdhD,
            _ => return Err(bad()),
        };
        match preset {
            Preset::Chain(d) | Preset::Random(d, _) if d == 0 => Err(bad()),
            Preset::Random(_, p) if !(0.0..=1.0).contains(&p) => Err(bad()),
            p => Ok(p),
        }
    }
}

impl Serialize for Preset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Preset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Root marginal of chain presets.
pub const CHAIN_ROOT_P1: f64 = 0.5;

fn labels(prefix: &str, d: usize) -> Vec<String> {
    let width = if d >= 10 { 2 } else { 1 };
    (0..d).map(|i| format!("{prefix}{i:0width$}")).collect()
}

fn strong_single_parent(node: &str, parent: &str) -> Cpt<f64> {
    Cpt::new(node, vec![parent.to_string()], vec![0.1, 0.9]).expect("valid CPT")
}

fn root(node: &str, p: f64) -> Cpt<f64> {
    Cpt::new(node, vec![], vec![p]).expect("valid CPT")
}

/// Noisy-OR style table for two parents.
fn two_parent(node: &str, a: &str, b: &str) -> Cpt<f64> {
    Cpt::new(node, vec![a.to_string(), b.to_string()], vec![0.1, 0.8, 0.8, 0.95]).expect("valid CPT")
}

fn network(nodes: Vec<String>, edges: &[(usize, usize)], cpts: Vec<Cpt<f64>>) -> DiscreteBayesNet<f64> {
    let dag = Dag::from_indices(nodes, edges).expect("preset graphs are acyclic");
    DiscreteBayesNet::new(dag, cpts).expect("preset CPTs match the graph")
}

/// Builds the preset's network; `seed` only matters for `Random`.
pub fn preset_network(preset: &Preset, seed: u64) -> DiscreteBayesNet<f64> {
    match *preset {
        Preset::Chain(d) => {
            let n = labels("x", d);
            let edges: Vec<(usize, usize)> = (1..d).map(|i| (i - 1, i)).collect();
            let mut cpts = vec![root(&n[0], CHAIN_ROOT_P1)];
            cpts.extend((1..d).map(|i| strong_single_parent(&n[i], &n[i - 1])));
            network(n, &edges, cpts)
        }
        Preset::Fork => {
            let n = labels("x", 3);
            let cpts = vec![root(&n[0], 0.5), strong_single_parent(&n[1], &n[0]), strong_single_parent(&n[2], &n[0])];
            network(n, &[(0, 1), (0, 2)], cpts)
        }
        Preset::Collider => {
            let n = labels("x", 3);
            let cpts = vec![root(&n[0], 0.5), root(&n[1], 0.5), two_parent(&n[2], &n[0], &n[1])];
            network(n, &[(0, 2), (1, 2)], cpts)
        }
        Preset::Diamond => {
            let n = labels("x", 4);
            let cpts = vec![
                root(&n[0], 0.5),
                strong_single_parent(&n[1], &n[0]),
                strong_single_parent(&n[2], &n[0]),
                two_parent(&n[3], &n[1], &n[2]),
            ];
            network(n, &[(0, 1), (0, 2), (1, 3), (2, 3)], cpts)
        }
        Preset::Random(d, p) => {
            let mut rng = derived_rng(seed, "preset-random", 0);
            let n = labels("x", d);
            let mut edges = Vec::new();
            for j in 0..d {
                for i in 0..j {
                    if rng.random_bool(p) {
                        edges.push((i, j));
                    }
                }
            }
            let dag = Dag::from_indices(n, &edges).expect("forward edges are acyclic");
            let cpts = (0..d)
                .map(|v| {
                    let parents: Vec<String> = dag.parents(v).iter().map(|&q| dag.label(q).to_string()).collect();
                    let p1 = (0..1usize << parents.len()).map(|_| rng.random_range(0.05..0.95)).collect();
                    Cpt::new(dag.label(v), parents, p1).expect("valid CPT")
                })
                .collect();
            DiscreteBayesNet::new(dag, cpts).expect("CPTs match the graph")
        }
        Preset::NdhB => {
            let n: Vec<String> = (1..=12).map(|i| format!("ndhB_ev{i:02}")).collect();
            // a branching maturation order with one two-parent event
            let edges = [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (2, 6), (6, 7), (4, 8), (8, 9), (9, 10), (7, 11), (10, 11)];
            let dag = Dag::from_indices(n.clone(), &edges).expect("acyclic");
            let cpts = (0..12)
                .map(|v| match dag.parents(v) {
                    [] => root(&n[v], 0.6),
                    [p] => strong_single_parent(&n[v], &n[*p]),
                    [a, b] => two_parent(&n[v], &n[*a], &n[*b]),
                    _ => unreachable!("at most two parents"),
                })
                .collect();
            DiscreteBayesNet::new(dag, cpts).expect("CPTs match the graph")
        }
        Preset::NdhD => {
            let n: Vec<String> = (1..=5).map(|i| format!("ndhD_ev{i}")).collect();
            let cpts = vec![
                root(&n[0], 0.6),
                strong_single_parent(&n[1], &n[0]),
                strong_single_parent(&n[2], &n[1]),
                strong_single_parent(&n[3], &n[0]),
                two_parent(&n[4], &n[2], &n[3]),
            ];
            network(n, &[(0, 1), (1, 2), (0, 3), (2, 4), (3, 4)], cpts)
        }
    }
}

impl Preset {
    /// Rows and block-missingness rate matching the real dataset, for the ndh presets.
    pub fn default_size(&self) -> (usize, f64) {
        match self {
            Preset::NdhB => (1899, 0.95),
            Preset::NdhD => (7752, 0.95),
            _ => (5000, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Named network; exactly one of `preset` and `network`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkJson>,
    /// Defaults to the preset's size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rows: Option<usize>,
    /// Mean missing block length as a fraction of the columns, in [0, 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_rate: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn preset(preset: Preset, n_rows: usize, missing_rate: f64, seed: u64) -> Self {
        Self {
            preset: Some(preset),
            network: None,
            n_rows: Some(n_rows),
            missing_rate: Some(missing_rate),
            seed,
        }
    }

    fn resolve(&self) -> Result<(DiscreteBayesNet<f64>, usize, f64), ScenarioError> {
        let (bn, defaults) = match (&self.preset, &self.network) {
            (Some(p), None) => (preset_network(p, self.seed), p.default_size()),
            (None, Some(net)) => (DiscreteBayesNet::from_json(net)?, (5000, 0.0)),
            _ => return Err(ScenarioError::Invalid("give exactly one of preset and network".into())),
        };
        let n = self.n_rows.unwrap_or(defaults.0);
        let rate = self.missing_rate.unwrap_or(defaults.1);
        if n == 0 {
            return Err(ScenarioError::Invalid("n_rows must be positive".into()));
        }
        if !(0.0..1.0).contains(&rate) {
            return Err(ScenarioError::Invalid(format!("missing_rate {rate} outside [0, 1)")));
        }
        Ok((bn, n, rate))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueEffect {
    pub treatment: String,
    pub outcome: String,
    pub ace: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: ScenarioSpec,
    pub network: NetworkJson,
    pub edges: Vec<(String, String)>,
    pub true_aces: Vec<TrueEffect>,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    /// With missing blocks.
    pub data: EventMatrix,
    /// Before masking.
    pub complete: EventMatrix,
    pub truth: GroundTruth,
    pub network: DiscreteBayesNet<f64>,
}

/// Block length: geometric on {0, 1, …} with mean `rate · d`, capped at `d − 1`.
fn block_length(rng: &mut impl Rng, d: usize, rate: f64) -> usize {
    if rate <= 0.0 || d < 2 {
        return 0;
    }
    let mean = rate * d as f64;
    let stop = 1.0 / (1.0 + mean);
    let mut len = 0;
    while len < d - 1 && !rng.random_bool(stop) {
        len += 1;
    }
    len
}

pub fn simulate(spec: &ScenarioSpec) -> Result<Simulation, ScenarioError> {
    let (bn, n, rate) = spec.resolve()?;
    let complete = sample(&bn, n, derive_seed(spec.seed, "simulate", 0))
        .with_provenance(format!("synthetic:{}", spec.preset.as_ref().map_or("network".into(), |p| p.to_string())));
    let d = complete.n_cols();
    let mut rng = derived_rng(spec.seed, "missingness", 0);
    let mut cells = complete.cells().to_vec();
    for r in 0..n {
        let len = block_length(&mut rng, d, rate);
        if len == 0 {
            continue;
        }
        let start = rng.random_range(0..=d - len);
        for c in start..start + len {
            cells[r * d + c] = Cell::Missing;
        }
    }
    let data = complete.with_cells(cells);
    let g = bn.dag();
    let true_aces = g
        .edge_labels()
        .into_iter()
        .map(|(x, y)| {
            let ace = ace_surgery(&bn, &x, &y).expect("edge endpoints are nodes");
            TrueEffect {
                treatment: x,
                outcome: y,
                ace,
            }
        })
        .collect();
    let truth = GroundTruth {
        spec: spec.clone(),
        network: bn.to_json(),
        edges: g.edge_labels(),
        true_aces,
    };
    Ok(Simulation {
        data,
        complete,
        truth,
        network: bn,
    })
}
