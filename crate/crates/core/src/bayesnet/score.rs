use super::network::aligned_data;
use super::{BayesNetError, Dag};
use crate::dataset::{BinaryData, EventMatrix};

/// Maximum-likelihood log-likelihood of one family (0·ln 0 = 0).
pub fn local_log_likelihood(data: &BinaryData, child: usize, parents: &[usize]) -> f64 {
    let (ones, totals) = data.family_counts(child, parents);
    ones.iter()
        .zip(&totals)
        .map(|(&k, &n)| {
            let (k, n) = (f64::from(k), f64::from(n));
            let z = n - k;
            let mut s = 0.0;
            if k > 0.0 {
                s += k * (k / n).ln();
            }
            if z > 0.0 {
                s += z * (z / n).ln();
            }
            s
        })
        .sum()
}

/// Local BIC term: ML log-likelihood minus `2^|parents| / 2 · ln N`.
pub fn local_bic(data: &BinaryData, child: usize, parents: &[usize]) -> f64 {
    let k = (1u64 << parents.len()) as f64;
    local_log_likelihood(data, child, parents) - 0.5 * k * (data.n_rows() as f64).ln()
}

/// `LL_ML − (k/2)·ln N` with `k = Σ 2^|parents|`. Higher is better.
pub fn bic_score(g: &Dag, data: &EventMatrix) -> Result<f64, BayesNetError> {
    let bin = aligned_data(g, data)?;
    Ok(bic_binary(g, &bin))
}

pub(crate) fn bic_binary(g: &Dag, bin: &BinaryData) -> f64 {
    (0..g.n_nodes()).map(|v| local_bic(bin, v, g.parents(v))).sum()
}

/// Sum of the maximum-likelihood family log-likelihoods.
pub fn ml_log_likelihood(g: &Dag, data: &EventMatrix) -> Result<f64, BayesNetError> {
    let bin = aligned_data(g, data)?;
    Ok((0..g.n_nodes()).map(|v| local_log_likelihood(&bin, v, g.parents(v))).sum())
}
