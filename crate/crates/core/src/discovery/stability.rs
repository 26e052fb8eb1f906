//! Stability selection over a λ grid and random subsamples for NOTEARS.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::notears::{notears_learn, NotearsConfig};
use super::{ContinuousData, DiscoveryError};
use crate::bayesnet::Dag;
use crate::seed::derived_rng;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub lambda_grid: Vec<f64>,
    pub n_resamples: usize,
    pub subsample_frac: f64,
    pub freq_threshold: f64,
    pub window: usize,
    /// Solver settings; its `lambda` is overridden by the grid.
    pub notears: NotearsConfig,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            lambda_grid: log_grid(1e-3, 1.0, 16),
            n_resamples: 50,
            subsample_frac: 0.8,
            freq_threshold: 0.6,
            window: 3,
            notears: NotearsConfig::default(),
        }
    }
}

/// `k` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrequency {
    pub from: String,
    pub to: String,
    /// One entry per grid point.
    pub frequencies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub lambda_grid: Vec<f64>,
    /// Edges selected at least once.
    pub edge_frequencies: Vec<EdgeFrequency>,
    /// Mean number of edges per grid point over successful fits.
    pub mean_edges: Vec<f64>,
    /// Grid indices that took part in the window search.
    pub eligible: Vec<usize>,
    /// Failed solver runs per grid point.
    pub failures: Vec<usize>,
    pub stable_edges: Vec<(String, String)>,
    /// Stable edges dropped to break cycles.
    pub dropped_for_acyclicity: Vec<(String, String)>,
}

impl StabilityReport {
    pub fn dag(&self, labels: &[String]) -> Result<Dag, DiscoveryError> {
        Ok(Dag::new(labels.to_vec(), &self.stable_edges)?)
    }
}

fn validate(cfg: &StabilityConfig) -> Result<(), DiscoveryError> {
    let bad = |m: &str| Err(DiscoveryError::InvalidConfig(m.to_string()));
    if cfg.lambda_grid.is_empty() || cfg.lambda_grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return bad("lambda grid must be non-empty and positive");
    }
    if cfg.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return bad("lambda grid must be strictly ascending");
    }
    if cfg.n_resamples == 0 || cfg.window == 0 {
        return bad("resamples and window must be positive");
    }
    if !(cfg.subsample_frac > 0.0 && cfg.subsample_frac <= 1.0) {
        return bad("subsample fraction must lie in (0, 1]");
    }
    Ok(())
}

pub fn stability_select<T: Scalar>(
    data: &ContinuousData<T>,
    cfg: &StabilityConfig,
    seed: u64,
) -> Result<(Dag, StabilityReport), DiscoveryError> {
    validate(cfg)?;
    let d = data.n_cols();
    let n = data.n_rows();
    let size = ((cfg.subsample_frac * n as f64).ceil() as usize).clamp(1, n);
    let subsamples: Vec<Vec<usize>> = (0..cfg.n_resamples)
        .map(|r| {
            let mut rng = derived_rng(seed, "stability", r as u64);
            let mut rows = sample(&mut rng, n, size).into_vec();
            rows.sort_unstable();
            rows
        })
        .collect();

    let n_lambda = cfg.lambda_grid.len();
    let tasks: Vec<(usize, usize)> =
        (0..n_lambda).flat_map(|l| (0..cfg.n_resamples).map(move |r| (l, r))).collect();
    let fits: Vec<Option<Vec<(usize, usize)>>> = tasks
        .par_iter()
        .map(|&(l, r)| {
            let sub = data.select_rows(&subsamples[r]);
            let nc = NotearsConfig {
                lambda: cfg.lambda_grid[l],
                ..cfg.notears.clone()
            };
            match notears_learn(&sub, &nc) {
                Ok(fit) => Some(fit.dag.edges()),
                Err(e) => {
                    log::warn!("stability: lambda {} resample {r} failed: {e}", cfg.lambda_grid[l]);
                    None
                }
            }
        })
        .collect();

    let mut counts = vec![0usize; d * d * n_lambda];
    let mut ok = vec![0usize; n_lambda];
    let mut failures = vec![0usize; n_lambda];
    let mut edge_total = vec![0usize; n_lambda];
    for (&(l, _), fit) in tasks.iter().zip(&fits) {
        match fit {
            Some(edges) => {
                ok[l] += 1;
                edge_total[l] += edges.len();
                for &(i, j) in edges {
                    counts[(i * d + j) * n_lambda + l] += 1;
                }
            }
            None => failures[l] += 1,
        }
    }
    let freq = |i: usize, j: usize, l: usize| {
        if ok[l] == 0 {
            0.0
        } else {
            counts[(i * d + j) * n_lambda + l] as f64 / ok[l] as f64
        }
    };
    let mean_edges: Vec<f64> = (0..n_lambda)
        .map(|l| if ok[l] == 0 { 0.0 } else { edge_total[l] as f64 / ok[l] as f64 })
        .collect();

    let (eligible, window): (Vec<usize>, usize) = if n_lambda == 1 {
        (if ok[0] > 0 { vec![0] } else { Vec::new() }, 1)
    } else {
        let e = (1..n_lambda).filter(|&l| ok[l] > 0 && mean_edges[l] > 0.0).collect();
        (e, cfg.window.min(n_lambda - 1))
    };

    let mut edge_frequencies = Vec::new();
    let mut stable: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let f: Vec<f64> = (0..n_lambda).map(|l| freq(i, j, l)).collect();
            if f.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut run = 0;
            let mut best = 0;
            let mut prev: Option<usize> = None;
            for &l in &eligible {
                let contiguous = prev.is_some_and(|p| p + 1 == l);
                if f[l] >= cfg.freq_threshold {
                    run = if contiguous { run + 1 } else { 1 };
                } else {
                    run = 0;
                }
                best = best.max(run);
                prev = Some(l);
            }
            if best >= window {
                let mean = eligible.iter().map(|&l| f[l]).sum::<f64>() / eligible.len() as f64;
                stable.push((i, j, mean));
            }
            edge_frequencies.push(EdgeFrequency {
                from: data.labels()[i].clone(),
                to: data.labels()[j].clone(),
                frequencies: f,
            });
        }
    }

    let labels = data.labels().to_vec();
    let mut dropped = Vec::new();
    let dag = loop {
        let edges: Vec<(usize, usize)> = stable.iter().map(|&(i, j, _)| (i, j)).collect();
        match Dag::from_indices(labels.clone(), &edges) {
            Ok(g) => break g,
            Err(_) => {
                let k = (0..stable.len())
                    .min_by(|&a, &b| {
                        stable[a].2.partial_cmp(&stable[b].2).unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .expect("a cyclic edge set is non-empty");
                let (i, j, _) = stable.remove(k);
                dropped.push((labels[i].clone(), labels[j].clone()));
            }
        }
    };
    let report = StabilityReport {
        lambda_grid: cfg.lambda_grid.clone(),
        edge_frequencies,
        mean_edges,
        eligible,
        failures,
        stable_edges: dag.edge_labels(),
        dropped_for_acyclicity: dropped,
    };
    Ok((dag, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-3, 1.0, 16);
        assert_eq!(g.len(), 16);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[15] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_grid() {
        let data = ContinuousData::new(vec!["a".into()], vec![vec![0.0f64, 1.0]]).unwrap();
        let cfg = StabilityConfig {
            lambda_grid: vec![0.1, 0.01],
            ..Default::default()
        };
        assert!(matches!(stability_select(&data, &cfg, 1), Err(DiscoveryError::InvalidConfig(_))));
    }
}
