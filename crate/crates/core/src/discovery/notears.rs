//! Continuous structure learning: least squares with an ℓ1 penalty under the
//! smooth acyclicity constraint `h(W) = tr(exp(W∘W)) − d = 0`, solved by an
//! augmented Lagrangian over the split `W = W⁺ − W⁻`.

use serde::{Deserialize, Serialize};

use super::matrix::SquareMatrix;
use super::optim::{minimize_nonneg, LbfgsConfig};
use super::{ContinuousData, DiscoveryError};
use crate::bayesnet::Dag;
use crate::Scalar;

/// Real d×d weights with zero diagonal; `w[(i, j)]` is the effect of `i` on `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedAdjacency<T> {
    labels: Vec<String>,
    w: SquareMatrix<T>,
}

impl<T: Scalar> WeightedAdjacency<T> {
    pub fn new(labels: Vec<String>, w: SquareMatrix<T>) -> Result<Self, DiscoveryError> {
        if labels.len() != w.dim() {
            return Err(DiscoveryError::Shape("one label per matrix row".into()));
        }
        if w.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(DiscoveryError::NonFinite);
        }
        if (0..w.dim()).any(|i| w[(i, i)] != T::zero()) {
            return Err(DiscoveryError::Shape("diagonal must be zero".into()));
        }
        Ok(Self { labels, w })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.w
    }

    pub fn weight(&self, from: usize, to: usize) -> T {
        self.w[(from, to)]
    }

    /// Non-zero entries as (from, to, weight), row-major.
    pub fn nonzero(&self) -> Vec<(usize, usize, T)> {
        let d = self.w.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| self.w[(i, j)] != T::zero())
            .map(|(i, j)| (i, j, self.w[(i, j)]))
            .collect()
    }
}

/// `h(W) = tr(exp(W∘W)) − d` and its gradient `exp(W∘W)ᵀ ∘ 2W`.
pub fn acyclicity_h<T: Scalar>(w: &SquareMatrix<T>) -> (T, SquareMatrix<T>) {
    let e = w.zip_map(w, |a, b| a * b).expm();
    let h = e.trace() - T::from_usize_lossy(w.dim());
    let two = T::lit(2.0);
    let grad = e.transpose().zip_map(w, |a, b| a * two * b);
    (h, grad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NotearsConfig {
    /// ℓ1 weight.
    pub lambda: f64,
    /// Entries with |w| below this are zeroed.
    pub omega: f64,
    pub standardize: bool,
    pub h_tol: f64,
    pub rho_max: f64,
    pub rho_growth: f64,
    /// Required shrink factor of h between dual updates.
    pub progress: f64,
    pub max_outer: usize,
    pub inner: LbfgsConfig,
}

impl Default for NotearsConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            omega: 0.3,
            standardize: false,
            h_tol: 1e-8,
            rho_max: 1e16,
            rho_growth: 10.0,
            progress: 0.25,
            max_outer: 100,
            inner: LbfgsConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NotearsFit<T> {
    /// Optimiser output before thresholding.
    pub raw: WeightedAdjacency<T>,
    /// After thresholding at `omega_used`.
    pub weights: WeightedAdjacency<T>,
    pub dag: Dag,
    pub h: T,
    /// Threshold actually applied (≥ the configured omega).
    pub omega_used: T,
    pub outer_iterations: usize,
}

pub fn notears_learn<T: Scalar>(
    data: &ContinuousData<T>,
    cfg: &NotearsConfig,
) -> Result<NotearsFit<T>, DiscoveryError> {
    let d = data.n_cols();
    let cov = SquareMatrix::from_row_major(d, data.covariance(cfg.standardize));
    notears_from_covariance(data.labels().to_vec(), &cov, cfg)
}

fn unpack<T: Scalar>(x: &[T], d: usize) -> SquareMatrix<T> {
    let m = d * (d - 1);
    let mut w = SquareMatrix::zeros(d);
    let mut p = 0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                w[(i, j)] = x[p] - x[m + p];
                p += 1;
            }
        }
    }
    w
}

/// Same as [`notears_learn`], starting from `S = XᵀX / n` of centred data.
pub fn notears_from_covariance<T: Scalar>(
    labels: Vec<String>,
    cov: &SquareMatrix<T>,
    cfg: &NotearsConfig,
) -> Result<NotearsFit<T>, DiscoveryError> {
    let d = cov.dim();
    if cov.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(DiscoveryError::NonFinite);
    }
    let lambda = T::lit(cfg.lambda);
    let m = d * d.saturating_sub(1);
    let eye = SquareMatrix::<T>::identity(d);
    let mut x = vec![T::zero(); 2 * m];
    let mut rho = T::one();
    let mut alpha = T::zero();
    let mut h = T::infinity();
    let rho_max = T::lit(cfg.rho_max);
    let mut outer = 0;

    if d > 1 {
        for it in 0..cfg.max_outer {
            outer = it + 1;
            let mut candidate = (x.clone(), h);
            while rho < rho_max {
                let objective = |x: &[T]| {
                    let w = unpack(x, d);
                    let r = eye.zip_map(&w, |a, b| a - b);
                    let sr = cov.matmul(&r);
                    let loss = r.as_slice().iter().zip(sr.as_slice()).map(|(&a, &b)| a * b).sum::<T>()
                        * T::lit(0.5);
                    let (hv, gh) = acyclicity_h(&w);
                    let value = loss
                        + T::lit(0.5) * rho * hv * hv
                        + alpha * hv
                        + lambda * x.iter().copied().sum::<T>();
                    let scale = rho * hv + alpha;
                    let mut grad = vec![T::zero(); 2 * m];
                    let mut p = 0;
                    for i in 0..d {
                        for j in 0..d {
                            if i != j {
                                let gs = -sr[(i, j)] + scale * gh[(i, j)];
                                grad[p] = gs + lambda;
                                grad[m + p] = -gs + lambda;
                                p += 1;
                            }
                        }
                    }
                    (value, grad)
                };
                let xn = minimize_nonneg(objective, x.clone(), &cfg.inner);
                let (hn, _) = acyclicity_h(&unpack(&xn, d));
                candidate = (xn, hn);
                if hn > T::lit(cfg.progress) * h {
                    rho = rho * T::lit(cfg.rho_growth);
                } else {
                    break;
                }
            }
            x = candidate.0;
            h = candidate.1;
            alpha = alpha + rho * h;
            if h <= T::lit(cfg.h_tol) || rho >= rho_max {
                break;
            }
        }
    } else {
        h = T::zero();
    }

    if !(h <= T::lit(cfg.h_tol)) {
        return Err(DiscoveryError::NotearsNotConverged { h: h.as_f64() });
    }
    let raw_w = if d > 1 { unpack(&x, d) } else { SquareMatrix::zeros(d) };
    let raw = WeightedAdjacency::new(labels.clone(), raw_w.clone())?;
    let (dag, thresholded, omega_used) = threshold_to_dag(&labels, &raw_w, T::lit(cfg.omega));
    Ok(NotearsFit {
        raw,
        weights: WeightedAdjacency::new(labels, thresholded)?,
        dag,
        h,
        omega_used,
        outer_iterations: outer,
    })
}

/// Zeroes |w| < omega; while the support is cyclic, removes the weakest
/// remaining entries, raising the threshold.
pub(crate) fn threshold_to_dag<T: Scalar>(
    labels: &[String],
    w: &SquareMatrix<T>,
    omega: T,
) -> (Dag, SquareMatrix<T>, T) {
    let d = w.dim();
    let mut kept: Vec<(usize, usize, T)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && w[(i, j)].abs() >= omega)
        .map(|(i, j)| (i, j, w[(i, j)].abs()))
        .collect();
    kept.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut omega_used = omega;
    loop {
        let edges: Vec<(usize, usize)> = kept.iter().map(|&(i, j, _)| (i, j)).collect();
        if let Ok(dag) = Dag::from_indices(labels.to_vec(), &edges) {
            let mut out = SquareMatrix::zeros(d);
            for &(i, j) in &edges {
                out[(i, j)] = w[(i, j)];
            }
            return (dag, out, omega_used);
        }
        let weakest = kept[0].2;
        kept.retain(|e| e.2 > weakest);
        omega_used = kept.first().map_or(weakest + weakest * T::epsilon(), |e| e.2);
        log::warn!("NOTEARS: thresholded graph cyclic; omega raised to {omega_used}");
    }
}
