//! Direct LiNGAM-style causal ordering.
//!
//! The most exogenous variable is chosen by comparing maximum-entropy
//! approximations of the mutual information between each variable and the
//! residual of regressing it on another; it is then regressed out of the
//! rest. Edges come from thresholding standardised least-squares
//! coefficients on order predecessors. On binary data the continuous-noise
//! assumption does not hold, so the output is a hypothesis.

use serde::{Deserialize, Serialize};

use super::ContinuousData;
use crate::bayesnet::Dag;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LingamConfig {
    /// Minimum |standardised coefficient| for an edge.
    pub threshold: f64,
}

impl Default for LingamConfig {
    fn default() -> Self {
        Self { threshold: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct LingamResult {
    pub dag: Dag,
    pub order: Vec<usize>,
    /// Row-major `coef[from * d + to]`, standardised.
    pub coefficients: Vec<f64>,
}

const VAR_EPS: f64 = 1e-12;
const K1: f64 = 79.047;
const K2: f64 = 7.4129;
const GAMMA: f64 = 0.37457;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

fn standardized(x: &[f64]) -> Option<Vec<f64>> {
    let m = mean(x);
    let sd = variance(x).sqrt();
    (sd > VAR_EPS.sqrt()).then(|| x.iter().map(|v| (v - m) / sd).collect())
}

/// `x − cov(x, y)/var(y) · y`
fn residual(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mx = mean(x);
    let my = mean(y);
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    let var = variance(y);
    if var < VAR_EPS {
        return x.to_vec();
    }
    let beta = cov / var;
    x.iter().zip(y).map(|(a, b)| a - beta * b).collect()
}

/// Maximum-entropy approximation of differential entropy (unit variance input).
fn entropy(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    let log_cosh = u.iter().map(|&v| log_cosh(v)).sum::<f64>() / n;
    let gauss = u.iter().map(|&v| v * (-v * v / 2.0).exp()).sum::<f64>() / n;
    (1.0 + (2.0 * std::f64::consts::PI).ln()) / 2.0 - K1 * (log_cosh - GAMMA).powi(2) - K2 * gauss.powi(2)
}

fn log_cosh(v: f64) -> f64 {
    let a = v.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Positive when `xi → xj` is the better-supported direction.
fn diff_mutual_info(xi: &[f64], xj: &[f64]) -> Option<f64> {
    let ri_j = standardized(&residual(xi, xj))?;
    let rj_i = standardized(&residual(xj, xi))?;
    Some((entropy(xj) + entropy(&ri_j)) - (entropy(xi) + entropy(&rj_i)))
}

/// Solves the symmetric system `a x = b` by Gaussian elimination with
/// partial pivoting; `None` when singular.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}

pub fn lingam_learn(data: &ContinuousData<f64>, cfg: &LingamConfig) -> LingamResult {
    let d = data.n_cols();
    let x: Vec<Vec<f64>> = (0..d)
        .map(|c| {
            let col = data.column(c);
            let m = mean(col);
            col.iter().map(|v| v - m).collect()
        })
        .collect();
    let sd: Vec<f64> = x.iter().map(|c| variance(c).sqrt()).collect();
    let constant: Vec<bool> = x.iter().map(|c| variance(c) < VAR_EPS).collect();

    let mut order: Vec<usize> = (0..d).filter(|&c| constant[c]).collect();
    let mut remaining: Vec<usize> = (0..d).filter(|&c| !constant[c]).collect();
    let mut work = x.clone();
    while remaining.len() > 1 {
        let std_cols: Vec<Option<Vec<f64>>> = remaining.iter().map(|&c| standardized(&work[c])).collect();
        let mut best: Option<(f64, usize)> = None;
        for (a, &i) in remaining.iter().enumerate() {
            let mut m = 0.0;
            for (b, _) in remaining.iter().enumerate() {
                if a == b {
                    continue;
                }
                if let (Some(xi), Some(xj)) = (&std_cols[a], &std_cols[b]) {
                    if let Some(diff) = diff_mutual_info(xi, xj) {
                        m += diff.min(0.0).powi(2);
                    }
                }
            }
            if best.is_none_or(|(bm, _)| m < bm) {
                best = Some((m, i));
            }
        }
        let (_, chosen) = best.expect("at least two candidates");
        order.push(chosen);
        remaining.retain(|&c| c != chosen);
        let pivot = work[chosen].clone();
        for &c in &remaining {
            work[c] = residual(&work[c], &pivot);
        }
    }
    order.extend(remaining);

    let mut coefficients = vec![0.0; d * d];
    let mut edges = Vec::new();
    for (pos, &k) in order.iter().enumerate() {
        if constant[k] {
            continue;
        }
        let preds: Vec<usize> = order[..pos].iter().copied().filter(|&p| !constant[p]).collect();
        if preds.is_empty() {
            continue;
        }
        let n = preds.len();
        let mut gram = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (a, &pa) in preds.iter().enumerate() {
            rhs[a] = x[pa].iter().zip(&x[k]).map(|(u, v)| u * v).sum();
            for (b, &pb) in preds.iter().enumerate() {
                gram[a * n + b] = x[pa].iter().zip(&x[pb]).map(|(u, v)| u * v).sum();
            }
        }
        let ridge = 1e-10 * (0..n).map(|i| gram[i * n + i]).fold(0.0, f64::max);
        for i in 0..n {
            gram[i * n + i] += ridge;
        }
        let Some(beta) = solve(gram, rhs) else { continue };
        for (a, &pa) in preds.iter().enumerate() {
            let std_coef = beta[a] * sd[pa] / sd[k];
            coefficients[pa * d + k] = std_coef;
            if std_coef.abs() > cfg.threshold {
                edges.push((pa, k));
            }
        }
    }
    let dag = Dag::from_indices(data.labels().to_vec(), &edges).expect("edges follow the causal order");
    LingamResult {
        dag,
        order,
        coefficients,
    }
}
