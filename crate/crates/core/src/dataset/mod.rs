//! Ternary event matrices (reads × events) and the statistics computed on them.

mod io;
mod stats;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use io::{detect_delimiter, load_reads, read_reads, write_reads, TokenSchema};
pub use stats::{
    contingency, cooccurrence_counts, exclude_events, missingness_profile, ContingencyTable,
    CooccurrenceCounts, MissingnessProfile, MissingnessReport,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown token {token:?} at row {row}, column {column:?}")]
    UnknownToken {
        token: String,
        row: usize,
        column: String,
    },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("duplicate column label {0:?}")]
    DuplicateLabel(String),
    #[error("empty column label at position {0}")]
    EmptyLabel(usize),
    #[error("no rows")]
    NoRows,
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("labels must be distinct, got {0:?} twice")]
    SameLabel(String),
    #[error("token sets of the schema overlap on {0:?}")]
    OverlappingSchema(String),
    #[error("matrix has {0} missing cells where complete data is required")]
    MissingCells(usize),
}

/// One cell of an [`EventMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Zero,
    One,
    Missing,
}

impl Cell {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Cell::One
        } else {
            Cell::Zero
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            Cell::Zero => Some(false),
            Cell::One => Some(true),
            Cell::Missing => None,
        }
    }

    pub fn is_missing(self) -> bool {
        self == Cell::Missing
    }
}

/// Reads × events matrix with cells in {0, 1, missing}. Immutable once built.
#[derive(Clone, PartialEq, Eq)]
pub struct EventMatrix {
    columns: Vec<String>,
    index: HashMap<String, usize>,
    cells: Vec<Cell>,
    n_rows: usize,
    provenance: String,
}

impl fmt::Debug for EventMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventMatrix")
            .field("columns", &self.columns)
            .field("n_rows", &self.n_rows)
            .field("provenance", &self.provenance)
            .finish()
    }
}

fn label_index(columns: &[String]) -> Result<HashMap<String, usize>, DatasetError> {
    let mut index = HashMap::with_capacity(columns.len());
    for (i, c) in columns.iter().enumerate() {
        if c.is_empty() {
            return Err(DatasetError::EmptyLabel(i));
        }
        if index.insert(c.clone(), i).is_some() {
            return Err(DatasetError::DuplicateLabel(c.clone()));
        }
    }
    Ok(index)
}

impl EventMatrix {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<Cell>>,
        provenance: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let n_cols = columns.len();
        let mut cells = Vec::with_capacity(rows.len() * n_cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(DatasetError::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: n_cols,
                });
            }
            cells.extend_from_slice(row);
        }
        Self::from_cells(columns, cells, provenance)
    }

    /// Builds a matrix from row-major cells.
    pub fn from_cells(
        columns: Vec<String>,
        cells: Vec<Cell>,
        provenance: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        if columns.is_empty() {
            return Err(DatasetError::EmptyMatrix);
        }
        let index = label_index(&columns)?;
        if cells.is_empty() {
            return Err(DatasetError::NoRows);
        }
        if cells.len() % columns.len() != 0 {
            return Err(DatasetError::RaggedRow {
                row: cells.len() / columns.len(),
                found: cells.len() % columns.len(),
                expected: columns.len(),
            });
        }
        let n_rows = cells.len() / columns.len();
        Ok(Self {
            columns,
            index,
            cells,
            n_rows,
            provenance: provenance.into(),
        })
    }

    /// Complete matrix from 0/1 rows.
    pub fn from_bits(columns: Vec<String>, rows: &[Vec<u8>]) -> Result<Self, DatasetError> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&b| Cell::from_bit(b != 0)).collect())
            .collect();
        Self::new(columns, rows, "")
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn column_index(&self, label: &str) -> Result<usize, DatasetError> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| DatasetError::UnknownLabel(label.to_string()))
    }

    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.columns.len() + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let d = self.columns.len();
        &self.cells[row * d..(row + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Cell]> {
        self.cells.chunks(self.columns.len())
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    pub fn is_complete(&self) -> bool {
        !self.cells.iter().any(|c| c.is_missing())
    }

    pub fn require_complete(&self) -> Result<(), DatasetError> {
        match self.missing_count() {
            0 => Ok(()),
            n => Err(DatasetError::MissingCells(n)),
        }
    }

    /// Copy of the matrix with the cells replaced (same shape).
    pub fn with_cells(&self, cells: Vec<Cell>) -> Self {
        assert_eq!(cells.len(), self.cells.len(), "cell count must not change");
        Self {
            columns: self.columns.clone(),
            index: self.index.clone(),
            cells,
            n_rows: self.n_rows,
            provenance: self.provenance.clone(),
        }
    }

    /// Rows selected by index, in the given order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, DatasetError> {
        let mut cells = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            cells.extend_from_slice(self.row(r));
        }
        Self::from_cells(self.columns.clone(), cells, self.provenance.clone())
    }

    /// Matrix restricted to (and reordered as) the given labels.
    pub fn select_columns(&self, labels: &[String]) -> Result<Self, DatasetError> {
        let idx = labels
            .iter()
            .map(|l| self.column_index(l))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cells = Vec::with_capacity(self.n_rows * idx.len());
        for row in self.rows() {
            cells.extend(idx.iter().map(|&c| row[c]));
        }
        Self::from_cells(labels.to_vec(), cells, self.provenance.clone())
    }

    /// Appends a fully observed column.
    pub fn with_column(&self, label: &str, values: &[bool]) -> Result<Self, DatasetError> {
        assert_eq!(values.len(), self.n_rows, "column length must match rows");
        let mut columns = self.columns.clone();
        columns.push(label.to_string());
        let mut cells = Vec::with_capacity(self.n_rows * columns.len());
        for (row, &v) in self.rows().zip(values) {
            cells.extend_from_slice(row);
            cells.push(Cell::from_bit(v));
        }
        Self::from_cells(columns, cells, self.provenance.clone())
    }

    /// Copy with one existing column overwritten by fully observed values.
    pub fn with_column_replaced(&self, col: usize, values: &[bool]) -> Self {
        assert_eq!(values.len(), self.n_rows, "column length must match rows");
        let d = self.n_cols();
        let mut cells = self.cells.clone();
        for (r, &v) in values.iter().enumerate() {
            cells[r * d + col] = Cell::from_bit(v);
        }
        self.with_cells(cells)
    }

    /// Column-major 0/1 view; fails if any cell is missing.
    pub fn to_binary(&self) -> Result<BinaryData, DatasetError> {
        self.require_complete()?;
        let d = self.n_cols();
        let mut cols = vec![Vec::with_capacity(self.n_rows); d];
        for row in self.rows() {
            for (c, cell) in row.iter().enumerate() {
                cols[c].push(u8::from(*cell == Cell::One));
            }
        }
        Ok(BinaryData {
            labels: self.columns.clone(),
            columns: cols,
            n_rows: self.n_rows,
        })
    }
}

/// Column-major complete binary data, the working representation of learners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryData {
    labels: Vec<String>,
    columns: Vec<Vec<u8>>,
    n_rows: usize,
}

impl BinaryData {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, c: usize) -> &[u8] {
        &self.columns[c]
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Counts of `child = 1` and totals per configuration of `parents`
    /// (binary counting order, first parent most significant).
    pub fn family_counts(&self, child: usize, parents: &[usize]) -> (Vec<u32>, Vec<u32>) {
        let k = parents.len();
        let mut ones = vec![0u32; 1 << k];
        let mut totals = vec![0u32; 1 << k];
        let child_col = &self.columns[child];
        let parent_cols: Vec<&[u8]> = parents.iter().map(|&p| self.columns[p].as_slice()).collect();
        for r in 0..self.n_rows {
            let mut cfg = 0usize;
            for col in &parent_cols {
                cfg = (cfg << 1) | usize::from(col[r]);
            }
            totals[cfg] += 1;
            ones[cfg] += u32::from(child_col[r]);
        }
        (ones, totals)
    }

    /// Column as centred-ready floating values.
    pub fn column_f64(&self, c: usize) -> Vec<f64> {
        self.columns[c].iter().map(|&b| f64::from(b)).collect()
    }
}
