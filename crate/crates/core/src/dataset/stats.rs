use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Cell, DatasetError, EventMatrix};

/// 2×2 counts over rows where both variables are observed. `n01` counts
/// `a = 0, b = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: String,
    pub b: String,
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Same table with the roles of `a` and `b` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            n00: self.n00,
            n01: self.n10,
            n10: self.n01,
            n11: self.n11,
        }
    }
}

pub fn contingency(m: &EventMatrix, a: &str, b: &str) -> Result<ContingencyTable, DatasetError> {
    if a == b {
        return Err(DatasetError::SameLabel(a.to_string()));
    }
    let ia = m.column_index(a)?;
    let ib = m.column_index(b)?;
    let mut n = [[0u64; 2]; 2];
    for row in m.rows() {
        if let (Some(x), Some(y)) = (row[ia].value(), row[ib].value()) {
            n[usize::from(x)][usize::from(y)] += 1;
        }
    }
    Ok(ContingencyTable {
        a: a.to_string(),
        b: b.to_string(),
        n00: n[0][0],
        n01: n[0][1],
        n10: n[1][0],
        n11: n[1][1],
    })
}

/// Key: the other columns equal to 1 (in column order); empty key = target alone.
pub type CooccurrenceCounts = BTreeMap<Vec<String>, usize>;

/// Over fully observed rows with `target = 1`, counts rows by which other
/// events are also present.
pub fn cooccurrence_counts(m: &EventMatrix, target: &str) -> Result<CooccurrenceCounts, DatasetError> {
    let t = m.column_index(target)?;
    let mut counts = CooccurrenceCounts::new();
    for row in m.rows() {
        if row.iter().any(|c| c.is_missing()) || row[t] != Cell::One {
            continue;
        }
        let key: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|&(c, cell)| c != t && *cell == Cell::One)
            .map(|(c, _)| m.columns()[c].clone())
            .collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissingnessProfile {
    pub columns: Vec<String>,
    pub column_missing_fraction: Vec<f64>,
    /// Maximal runs of consecutive missing cells per row.
    pub row_missing_runs: Vec<usize>,
    pub row_single_block: Vec<bool>,
    pub fully_observed_rows: usize,
}

impl MissingnessProfile {
    pub fn single_block_fraction(&self) -> f64 {
        if self.row_single_block.is_empty() {
            return 0.0;
        }
        let k = self.row_single_block.iter().filter(|b| **b).count();
        k as f64 / self.row_single_block.len() as f64
    }

    pub fn report(&self) -> MissingnessReport {
        MissingnessReport {
            columns: self
                .columns
                .iter()
                .zip(&self.column_missing_fraction)
                .map(|(label, f)| ColumnMissingness {
                    label: label.clone(),
                    missing_fraction: *f,
                })
                .collect(),
            rows_fully_observed: self.fully_observed_rows,
            rows_single_block_fraction: self.single_block_fraction(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnMissingness {
    pub label: String,
    pub missing_fraction: f64,
}

/// JSON form of a [`MissingnessProfile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingnessReport {
    pub columns: Vec<ColumnMissingness>,
    pub rows_fully_observed: usize,
    pub rows_single_block_fraction: f64,
}

pub fn missingness_profile(m: &EventMatrix) -> MissingnessProfile {
    let mut col_missing = vec![0usize; m.n_cols()];
    let mut runs = Vec::with_capacity(m.n_rows());
    let mut full = 0;
    for row in m.rows() {
        let mut n_runs = 0;
        let mut in_run = false;
        for (c, cell) in row.iter().enumerate() {
            if cell.is_missing() {
                col_missing[c] += 1;
                if !in_run {
                    n_runs += 1;
                }
                in_run = true;
            } else {
                in_run = false;
            }
        }
        if n_runs == 0 {
            full += 1;
        }
        runs.push(n_runs);
    }
    let n = m.n_rows() as f64;
    MissingnessProfile {
        columns: m.columns().to_vec(),
        column_missing_fraction: col_missing.iter().map(|&k| k as f64 / n).collect(),
        row_single_block: runs.iter().map(|&r| r <= 1).collect(),
        row_missing_runs: runs,
        fully_observed_rows: full,
    }
}

pub fn exclude_events(m: &EventMatrix, names: &BTreeSet<String>) -> Result<EventMatrix, DatasetError> {
    for name in names {
        m.column_index(name)?;
    }
    let keep: Vec<String> = m
        .columns()
        .iter()
        .filter(|c| !names.contains(*c))
        .cloned()
        .collect();
    if keep.is_empty() {
        return Err(DatasetError::EmptyMatrix);
    }
    m.select_columns(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Cell::{Missing as M, One as I, Zero as O};

    fn matrix(cols: &[&str], rows: Vec<Vec<Cell>>) -> EventMatrix {
        EventMatrix::new(cols.iter().map(|s| s.to_string()).collect(), rows, "test").unwrap()
    }

    #[test]
    fn two_row_contingency() {
        let m = matrix(&["a", "b"], vec![vec![I, I], vec![O, O]]);
        let t = contingency(&m, "a", "b").unwrap();
        assert_eq!((t.n00, t.n01, t.n10, t.n11), (1, 0, 0, 1));
    }

    #[test]
    fn all_missing_column_gives_empty_table() {
        let m = matrix(&["a", "b"], vec![vec![I, M], vec![O, M]]);
        let t = contingency(&m, "a", "b").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn contingency_errors() {
        let m = matrix(&["a", "b"], vec![vec![I, O]]);
        assert!(matches!(contingency(&m, "a", "a"), Err(DatasetError::SameLabel(_))));
        assert!(matches!(contingency(&m, "a", "z"), Err(DatasetError::UnknownLabel(_))));
    }

    #[test]
    fn cooccurrence_single_column_and_absent_target() {
        let m = matrix(&["t"], vec![vec![I], vec![I], vec![I]]);
        let c = cooccurrence_counts(&m, "t").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&Vec::<String>::new()], 3);

        let m = matrix(&["t", "u"], vec![vec![O, I], vec![O, O]]);
        assert!(cooccurrence_counts(&m, "t").unwrap().is_empty());
    }

    #[test]
    fn cooccurrence_skips_incomplete_rows() {
        let m = matrix(
            &["t", "u", "v"],
            vec![vec![I, I, O], vec![I, I, M], vec![I, I, I], vec![I, O, O]],
        );
        let c = cooccurrence_counts(&m, "t").unwrap();
        assert_eq!(c[&vec!["u".to_string()]], 1);
        assert_eq!(c[&vec!["u".to_string(), "v".to_string()]], 1);
        assert_eq!(c[&Vec::<String>::new()], 1);
    }

    #[test]
    fn missing_runs_per_row() {
        let m = matrix(&["a", "b", "c", "d"], vec![vec![I, M, M, O]]);
        let p = missingness_profile(&m);
        assert_eq!(p.row_missing_runs, vec![1]);
        assert!(p.row_single_block[0]);

        let m = matrix(&["a", "b", "c"], vec![vec![M, I, M], vec![O, O, O]]);
        let p = missingness_profile(&m);
        assert_eq!(p.row_missing_runs, vec![2, 0]);
        assert_eq!(p.row_single_block, vec![false, true]);
        assert_eq!(p.fully_observed_rows, 1);
        assert_eq!(p.column_missing_fraction, vec![0.5, 0.0, 0.5]);
        let report = serde_json::to_value(p.report()).unwrap();
        assert_eq!(report["rows_fully_observed"], 1);
        assert_eq!(report["rows_single_block_fraction"], 0.5);
        assert_eq!(report["columns"][0]["label"], "a");
    }

    #[test]
    fn exclusion() {
        let m = matrix(&["a", "intron"], vec![vec![I, O]]);
        let names: BTreeSet<String> = ["intron".to_string()].into();
        assert_eq!(exclude_events(&m, &names).unwrap().columns(), &["a".to_string()]);
        assert_eq!(exclude_events(&m, &BTreeSet::new()).unwrap(), m);
        let all: BTreeSet<String> = ["a".to_string(), "intron".to_string()].into();
        assert!(matches!(exclude_events(&m, &all), Err(DatasetError::EmptyMatrix)));
        let bad: BTreeSet<String> = ["zz".to_string()].into();
        assert!(matches!(exclude_events(&m, &bad), Err(DatasetError::UnknownLabel(_))));
    }
}
