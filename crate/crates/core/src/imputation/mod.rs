//! Missing-cell handling: a single-pass initial imputation followed by an EM
//! loop that alternates most-likely-value imputation with relearning the
//! network.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayesnet::{fit_cpts, BayesNetError, Dag, DiscreteBayesNet};
use crate::dataset::{Cell, DatasetError, EventMatrix};
use crate::discovery::{learn, Algorithm, DiscoveryError, LearnerConfig};

/// Neighbours consulted per cell by round-robin imputation.
pub const ROUND_ROBIN_K: usize = 25;
/// Sweeps over all columns by round-robin imputation.
pub const ROUND_ROBIN_SWEEPS: usize = 3;

#[derive(Debug, Error)]
pub enum ImputationError {
    #[error("column {0:?} has no observed cells")]
    FullyMissingColumn(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Graph(#[from] BayesNetError),
    #[error("structure learning failed at EM iteration {iteration}: {source}")]
    Learner {
        iteration: usize,
        #[source]
        source: DiscoveryError,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown imputation method '{0}'")]
    UnknownMethod(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMethod {
    #[default]
    Mode,
    RoundRobin,
}

impl fmt::Display for InitialMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialMethod::Mode => "mode",
            InitialMethod::RoundRobin => "round_robin",
        })
    }
}

impl FromStr for InitialMethod {
    type Err = ImputationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mode" => Ok(InitialMethod::Mode),
            "round_robin" | "round-robin" => Ok(InitialMethod::RoundRobin),
            _ => Err(ImputationError::UnknownMethod(s.to_string())),
        }
    }
}

/// Majority of the observed cells per column, ties → 0.
fn observed_modes(m: &EventMatrix) -> Result<Vec<bool>, ImputationError> {
    let d = m.n_cols();
    let mut ones = vec![0usize; d];
    let mut seen = vec![0usize; d];
    for row in m.rows() {
        for (c, cell) in row.iter().enumerate() {
            if let Some(v) = cell.value() {
                seen[c] += 1;
                ones[c] += usize::from(v);
            }
        }
    }
    (0..d)
        .map(|c| {
            if seen[c] == 0 {
                Err(ImputationError::FullyMissingColumn(m.columns()[c].clone()))
            } else {
                Ok(2 * ones[c] > seen[c])
            }
        })
        .collect()
}

pub fn initial_impute(m: &EventMatrix, method: InitialMethod) -> Result<EventMatrix, ImputationError> {
    let modes = observed_modes(m)?;
    let d = m.n_cols();
    let cells: Vec<Cell> = m
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &c)| if c.is_missing() { Cell::from_bit(modes[i % d]) } else { c })
        .collect();
    match method {
        InitialMethod::Mode => Ok(m.with_cells(cells)),
        InitialMethod::RoundRobin => Ok(round_robin(m, cells, &modes)),
    }
}

/// Rows packed into 64-bit words for Hamming distances.
struct Packed {
    words: usize,
    bits: Vec<u64>,
}

impl Packed {
    fn new(cells: &[Cell], d: usize) -> Self {
        let words = d.div_ceil(64);
        let n = cells.len() / d;
        let mut bits = vec![0u64; n * words];
        for r in 0..n {
            for c in 0..d {
                if cells[r * d + c] == Cell::One {
                    bits[r * words + c / 64] |= 1 << (c % 64);
                }
            }
        }
        Self { words, bits }
    }

    fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.bits[r * self.words + c / 64];
        if v {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    /// Hamming distance ignoring column `skip`.
    fn distance(&self, a: usize, b: usize, skip: usize) -> usize {
        let (ra, rb) = (&self.bits[a * self.words..][..self.words], &self.bits[b * self.words..][..self.words]);
        let mut total = 0;
        for w in 0..self.words {
            let mut x = ra[w] ^ rb[w];
            if skip / 64 == w {
                x &= !(1 << (skip % 64));
            }
            total += x.count_ones() as usize;
        }
        total
    }
}

fn round_robin(m: &EventMatrix, mut cells: Vec<Cell>, modes: &[bool]) -> EventMatrix {
    let d = m.n_cols();
    let n = m.n_rows();
    let mut packed = Packed::new(&cells, d);
    for _ in 0..ROUND_ROBIN_SWEEPS {
        for c in 0..d {
            let missing: Vec<usize> = (0..n).filter(|&r| m.get(r, c).is_missing()).collect();
            if missing.is_empty() {
                continue;
            }
            let donors: Vec<usize> = (0..n).filter(|&r| !m.get(r, c).is_missing()).collect();
            let frozen = &packed;
            let updates: Vec<bool> = missing
                .par_iter()
                .map(|&r| {
                    // Bucket donors by distance; nearest first, row index breaks ties.
                    let mut by_distance: Vec<Vec<usize>> = vec![Vec::new(); d + 1];
                    for &s in &donors {
                        by_distance[frozen.distance(r, s, c)].push(s);
                    }
                    let (mut taken, mut ones) = (0usize, 0usize);
                    'outer: for bucket in &by_distance {
                        for &s in bucket {
                            if taken == ROUND_ROBIN_K {
                                break 'outer;
                            }
                            taken += 1;
                            ones += usize::from(frozen.get(s, c));
                        }
                    }
                    match (2 * ones).cmp(&taken) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => modes[c],
                    }
                })
                .collect();
            for (&r, &v) in missing.iter().zip(&updates) {
                packed.set(r, c, v);
                cells[r * d + c] = Cell::from_bit(v);
            }
        }
    }
    m.with_cells(cells)
}

/// `|E1 Δ E2| / max(|E1 ∪ E2|, 1)` over directed edges.
pub fn edge_change_fraction(g1: &Dag, g2: &Dag) -> Result<f64, ImputationError> {
    let a: BTreeSet<&str> = g1.nodes().iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = g2.nodes().iter().map(String::as_str).collect();
    if a != b {
        return Err(BayesNetError::NodeSetMismatch.into());
    }
    let e1: BTreeSet<(String, String)> = g1.edge_labels().into_iter().collect();
    let e2: BTreeSet<(String, String)> = g2.edge_labels().into_iter().collect();
    let diff = e1.symmetric_difference(&e2).count();
    let union = e1.union(&e2).count();
    Ok(diff as f64 / union.max(1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub initial: InitialMethod,
    pub algorithm: Algorithm,
    pub learner: LearnerConfig,
    pub max_iter: usize,
    pub tol: f64,
    pub ess: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            initial: InitialMethod::Mode,
            algorithm: Algorithm::Hc,
            learner: LearnerConfig::default(),
            max_iter: 10,
            tol: 0.01,
            ess: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ImputationResult {
    pub completed: EventMatrix,
    pub model: DiscreteBayesNet<f64>,
    pub iterations: usize,
    pub edge_change_history: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub edge_change_history: Vec<f64>,
    pub converged: bool,
}

impl ImputationResult {
    pub fn report(&self) -> ConvergenceReport {
        ConvergenceReport {
            iterations: self.iterations,
            edge_change_history: self.edge_change_history.clone(),
            converged: self.converged,
        }
    }
}

/// One E-step: every originally missing cell becomes the more likely value
/// of its node given the current parent values; P = 0.5 gives the column mode.
fn e_step(
    original: &EventMatrix,
    current: &EventMatrix,
    model: &DiscreteBayesNet<f64>,
    modes: &[bool],
) -> Result<EventMatrix, ImputationError> {
    let d = original.n_cols();
    let node_of: Vec<usize> = original
        .columns()
        .iter()
        .map(|c| model.dag().index_of(c))
        .collect::<Result<_, _>>()?;
    let col_of: Vec<usize> = {
        let mut v = vec![0; d];
        for (c, &node) in node_of.iter().enumerate() {
            v[node] = c;
        }
        v
    };
    let cells: Vec<Cell> = (0..original.n_rows())
        .into_par_iter()
        .flat_map_iter(|r| {
            let row = current.row(r);
            let assignment: Vec<bool> = (0..d).map(|node| row[col_of[node]] == Cell::One).collect();
            (0..d)
                .map(|c| {
                    if !original.get(r, c).is_missing() {
                        return original.get(r, c);
                    }
                    let p = model.p1_given(node_of[c], &assignment);
                    Cell::from_bit(if p > 0.5 {
                        true
                    } else if p < 0.5 {
                        false
                    } else {
                        modes[c]
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(original.with_cells(cells))
}

pub fn em_impute(m: &EventMatrix, cfg: &EmConfig, seed: u64) -> Result<ImputationResult, ImputationError> {
    if !(cfg.tol >= 0.0) || cfg.max_iter == 0 {
        return Err(ImputationError::InvalidConfig("tol must be ≥ 0 and max_iter ≥ 1".into()));
    }
    let modes = observed_modes(m)?;
    let mut completed = initial_impute(m, cfg.initial)?;
    let relearn = |data: &EventMatrix, iteration: usize| -> Result<(Dag, DiscreteBayesNet<f64>), ImputationError> {
        let learned = learn(data, cfg.algorithm, &cfg.learner, seed)
            .map_err(|source| ImputationError::Learner { iteration, source })?;
        let model = fit_cpts(&learned.dag, data, cfg.ess)?;
        Ok((learned.dag, model))
    };
    let (mut dag, mut model) = relearn(&completed, 0)?;
    let mut history = Vec::new();
    let mut converged = false;
    for iteration in 1..=cfg.max_iter {
        completed = e_step(m, &completed, &model, &modes)?;
        let (next_dag, next_model) = relearn(&completed, iteration)?;
        let change = edge_change_fraction(&dag, &next_dag)?;
        log::info!("EM iteration {iteration}: edge change {change:.4}");
        history.push(change);
        dag = next_dag;
        model = next_model;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(ImputationResult {
        completed,
        model,
        iterations: history.len(),
        edge_change_history: history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(cells: &[Cell]) -> EventMatrix {
        EventMatrix::new(vec!["a".into()], cells.iter().map(|&c| vec![c]).collect(), "t").unwrap()
    }

    #[test]
    fn mode_majority_and_tie() {
        use Cell::*;
        let m = column(&[One, One, Missing, Zero]);
        let out = initial_impute(&m, InitialMethod::Mode).unwrap();
        assert_eq!(out.cells(), &[One, One, One, Zero]);
        let m = column(&[One, Zero, Missing]);
        assert_eq!(initial_impute(&m, InitialMethod::Mode).unwrap().get(2, 0), Zero);
    }

    #[test]
    fn complete_matrix_is_unchanged() {
        let m = EventMatrix::from_bits(vec!["a".into(), "b".into()], &[vec![1, 0], vec![0, 1]]).unwrap();
        for method in [InitialMethod::Mode, InitialMethod::RoundRobin] {
            assert_eq!(initial_impute(&m, method).unwrap().cells(), m.cells());
        }
    }

    #[test]
    fn fully_missing_column_rejected() {
        let m = column(&[Cell::Missing, Cell::Missing]);
        assert!(matches!(
            initial_impute(&m, InitialMethod::Mode),
            Err(ImputationError::FullyMissingColumn(_))
        ));
    }

    #[test]
    fn round_robin_copies_a_duplicated_column() {
        use Cell::*;
        // b equals a on every observed row, so neighbours at distance 0 decide
        let mut rows = Vec::new();
        for i in 0..60 {
            let v = Cell::from_bit(i % 3 == 0);
            rows.push(vec![v, v]);
        }
        rows.push(vec![One, Missing]);
        let m = EventMatrix::new(vec!["a".into(), "b".into()], rows, "t").unwrap();
        let out = initial_impute(&m, InitialMethod::RoundRobin).unwrap();
        assert_eq!(out.get(60, 1), One);
        assert_eq!(initial_impute(&m, InitialMethod::Mode).unwrap().get(60, 1), Zero);
    }

    #[test]
    fn edge_change_examples() {
        let nodes: Vec<String> = (0..12).map(|i| format!("n{i:02}")).collect();
        let mut shared: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
        let g = Dag::from_indices(nodes.clone(), &shared).unwrap();
        assert_eq!(edge_change_fraction(&g, &g).unwrap(), 0.0);
        shared.push((10, 11));
        let g1 = Dag::from_indices(nodes.clone(), &shared).unwrap();
        shared.pop();
        shared.push((11, 10));
        let g2 = Dag::from_indices(nodes.clone(), &shared).unwrap();
        assert!((edge_change_fraction(&g1, &g2).unwrap() - 2.0 / 11.0).abs() < 1e-15);
        let a = Dag::from_indices(nodes.clone(), &[(0, 1)]).unwrap();
        let b = Dag::from_indices(nodes.clone(), &[(2, 3)]).unwrap();
        assert_eq!(edge_change_fraction(&a, &b).unwrap(), 1.0);
        let empty = Dag::empty(nodes).unwrap();
        assert_eq!(edge_change_fraction(&empty, &empty).unwrap(), 0.0);
        let other = Dag::empty(vec!["x".into()]).unwrap();
        assert!(edge_change_fraction(&empty, &other).is_err());
    }

    #[test]
    fn e_step_tie_uses_mode() {
        use Cell::*;
        let dag = Dag::empty(vec!["a".into()]).unwrap();
        let bn = DiscreteBayesNet::new(dag, vec![crate::bayesnet::Cpt::new("a", vec![], vec![0.5]).unwrap()]).unwrap();
        let m = column(&[One, One, Zero, Missing]);
        let current = initial_impute(&m, InitialMethod::Mode).unwrap();
        let out = e_step(&m, &current, &bn, &[true]).unwrap();
        assert_eq!(out.get(3, 0), One);
    }

    #[test]
    fn em_on_complete_data_is_one_iteration() {
        let rows: Vec<Vec<u8>> = (0..50).map(|i| vec![(i % 2) as u8, (i % 2) as u8, (i % 5 == 0) as u8]).collect();
        let m = EventMatrix::from_bits(vec!["a".into(), "b".into(), "c".into()], &rows).unwrap();
        let r = em_impute(&m, &EmConfig::default(), 1).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.edge_change_history, vec![0.0]);
        assert!(r.converged);
        assert_eq!(r.completed.cells(), m.cells());
    }
}
