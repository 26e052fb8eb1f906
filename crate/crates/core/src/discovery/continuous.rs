use crate::dataset::BinaryData;
use crate::Scalar;

use super::DiscoveryError;

/// Column-major real-valued samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousData<T> {
    labels: Vec<String>,
    columns: Vec<Vec<T>>,
    n_rows: usize,
}

impl<T: Scalar> ContinuousData<T> {
    pub fn new(labels: Vec<String>, columns: Vec<Vec<T>>) -> Result<Self, DiscoveryError> {
        if labels.is_empty() || labels.len() != columns.len() {
            return Err(DiscoveryError::Shape("one column per label required".into()));
        }
        let n_rows = columns[0].len();
        if n_rows == 0 || columns.iter().any(|c| c.len() != n_rows) {
            return Err(DiscoveryError::Shape("columns must share a non-zero length".into()));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DiscoveryError::NonFinite);
        }
        Ok(Self {
            labels,
            columns,
            n_rows,
        })
    }

    pub fn from_binary(data: &BinaryData) -> Self {
        let columns = (0..data.n_cols())
            .map(|c| data.column(c).iter().map(|&b| if b == 1 { T::one() } else { T::zero() }).collect())
            .collect();
        Self {
            labels: data.labels().to_vec(),
            columns,
            n_rows: data.n_rows(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, c: usize) -> &[T] {
        &self.columns[c]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            labels: self.labels.clone(),
            columns: self
                .columns
                .iter()
                .map(|col| rows.iter().map(|&r| col[r]).collect())
                .collect(),
            n_rows: rows.len(),
        }
    }

    /// Row-major d×d matrix `XᵀX / n` of the centred (optionally
    /// standardised) columns.
    pub fn covariance(&self, standardize: bool) -> Vec<T> {
        let d = self.n_cols();
        let n = T::from_usize_lossy(self.n_rows);
        let centred: Vec<Vec<T>> = self
            .columns
            .iter()
            .map(|col| {
                let mean = col.iter().copied().sum::<T>() / n;
                let mut c: Vec<T> = col.iter().map(|&v| v - mean).collect();
                if standardize {
                    let sd = (c.iter().map(|&v| v * v).sum::<T>() / n).sqrt();
                    if sd > T::zero() {
                        c.iter_mut().for_each(|v| *v = *v / sd);
                    }
                }
                c
            })
            .collect();
        let mut s = vec![T::zero(); d * d];
        for i in 0..d {
            for j in i..d {
                let v = centred[i].iter().zip(&centred[j]).map(|(&a, &b)| a * b).sum::<T>() / n;
                s[i * d + j] = v;
                s[j * d + i] = v;
            }
        }
        s
    }
}
