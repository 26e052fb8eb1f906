mod common;

use common::*;
use eventchron::bayesnet::{sample, Dag};
use eventchron::dataset::{ContingencyTable, EventMatrix};
use eventchron::discovery::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn skeleton(g: &Dag) -> Vec<(String, String)> {
    let mut s: Vec<(String, String)> = g
        .edge_labels()
        .into_iter()
        .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect();
    s.sort();
    s
}

fn chain_skeleton() -> Vec<(String, String)> {
    vec![("A".into(), "B".into()), ("B".into(), "C".into())]
}

#[test]
fn hc_recovers_chain_skeleton() {
    let data = sample(&chain_bn(), 5000, 11).to_binary().unwrap();
    let r = hc_learn(&data, &HcConfig::default());
    assert_eq!(skeleton(&r.dag), chain_skeleton());
    assert!(r.score_trace.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn hc_independent_columns_mostly_empty() {
    let empty = (0..40)
        .filter(|&s| hc_learn(&coins(3, 10_000, s).to_binary().unwrap(), &HcConfig::default()).dag.n_edges() == 0)
        .count();
    assert!(empty as f64 / 40.0 >= 0.95, "{empty}/40");
}

#[test]
fn hc_single_row_is_empty() {
    let data = EventMatrix::from_bits(names(&["a", "b", "c"]), &[vec![1, 0, 1]]).unwrap();
    assert_eq!(hc_learn(&data.to_binary().unwrap(), &HcConfig::default()).dag.n_edges(), 0);
}

#[test]
fn pc_recovers_chain_with_separation() {
    let data = sample(&chain_bn(), 10_000, 5).to_binary().unwrap();
    let r = pc_learn(&data, &PcConfig::default());
    assert_eq!(skeleton(&r.dag), chain_skeleton());
    assert_eq!(r.sepsets.get(&(0, 2)), Some(&vec![1]));
    assert_eq!(r.order_forced.len(), 2);
}

#[test]
fn pc_orients_noisy_or_collider() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<u8>> = (0..10_000)
        .map(|_| {
            let a = rng.random_bool(0.5);
            let b = rng.random_bool(0.5);
            let c = if a || b { rng.random_bool(0.9) } else { rng.random_bool(0.1) };
            vec![a as u8, b as u8, c as u8]
        })
        .collect();
    let data = EventMatrix::from_bits(names(&["A", "B", "C"]), &rows).unwrap().to_binary().unwrap();
    let r = pc_learn(&data, &PcConfig::default());
    assert_eq!(r.dag.edge_labels(), vec![("A".into(), "C".into()), ("B".into(), "C".into())]);
    assert!(r.order_forced.is_empty());
}

#[test]
fn pc_noise_free_xor_collider_is_unfaithful() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<u8>> = (0..10_000)
        .map(|_| {
            let a = rng.random_range(0..2u8);
            let b = rng.random_range(0..2u8);
            vec![a, b, a ^ b]
        })
        .collect();
    let data = EventMatrix::from_bits(names(&["A", "B", "C"]), &rows).unwrap().to_binary().unwrap();
    // every pair is marginally independent, so no edge survives level 0
    assert_eq!(pc_learn(&data, &PcConfig::default()).dag.n_edges(), 0);
}

#[test]
fn pc_independent_pair_is_edgeless() {
    let empty = (0..40)
        .filter(|&s| pc_learn(&coins(2, 2000, 100 + s).to_binary().unwrap(), &PcConfig::default()).dag.n_edges() == 0)
        .count();
    assert!(empty >= 38, "{empty}/40");
}

#[test]
fn pc_skeleton_invariant_under_column_permutation() {
    let m = sample(&chain_bn(), 3000, 8);
    let base = skeleton(&pc_learn(&m.to_binary().unwrap(), &PcConfig::default()).dag);
    let perm = names(&["C", "A", "B"]);
    let permuted = m.select_columns(&perm).unwrap();
    let other = skeleton(&pc_learn(&permuted.to_binary().unwrap(), &PcConfig::default()).dag);
    assert_eq!(base, other);
}

fn uniform_sem(n: usize, seed: u64, coef: f64) -> ContinuousData<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x2: Vec<f64> = x1.iter().map(|&v| coef * v + rng.random_range(-1.0..1.0)).collect();
    ContinuousData::new(names(&["x1", "x2"]), vec![x1, x2]).unwrap()
}

#[test]
fn lingam_orders_uniform_sem() {
    let r = lingam_learn(&uniform_sem(5000, 1, 0.8), &LingamConfig::default());
    assert_eq!(r.order, vec![0, 1]);
    assert_eq!(r.dag.edge_labels(), vec![("x1".into(), "x2".into())]);
    // order is found from the data, not the column order
    let swapped = {
        let d = uniform_sem(5000, 1, 0.8);
        ContinuousData::new(names(&["x2", "x1"]), vec![d.column(1).to_vec(), d.column(0).to_vec()]).unwrap()
    };
    let r = lingam_learn(&swapped, &LingamConfig::default());
    assert_eq!(r.order, vec![1, 0]);
}

#[test]
fn lingam_single_and_independent() {
    let one = ContinuousData::new(names(&["a"]), vec![vec![0.0, 1.0, 2.0]]).unwrap();
    assert_eq!(lingam_learn(&one, &LingamConfig::default()).dag.n_nodes(), 1);
    let r = lingam_learn(&uniform_sem(5000, 2, 0.0), &LingamConfig::default());
    assert_eq!(r.dag.n_edges(), 0);
}

#[test]
fn lingam_constant_column_is_isolated() {
    let d = uniform_sem(500, 3, 0.8);
    let data = ContinuousData::new(
        names(&["x1", "x2", "k"]),
        vec![d.column(0).to_vec(), d.column(1).to_vec(), vec![1.0; 500]],
    )
    .unwrap();
    let r = lingam_learn(&data, &LingamConfig::default());
    assert!(r.dag.is_isolated(2));
}

#[test]
fn h_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let vals: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = SquareMatrix::from_fn(5, |i, j| if i == j { 0.0 } else { vals[i * 5 + j] });
        let (_, grad) = acyclicity_h(&w);
        for i in 0..5 {
            for j in 0..5 {
                let bump = |delta: f64| {
                    let m = SquareMatrix::from_fn(5, |a, b| w[(a, b)] + if (a, b) == (i, j) { delta } else { 0.0 });
                    acyclicity_h(&m).0
                };
                let fd = (bump(1e-5) - bump(-1e-5)) / 2e-5;
                assert!((fd - grad[(i, j)]).abs() < 1e-6, "({i},{j}) fd {fd} vs {}", grad[(i, j)]);
            }
        }
    }
}

#[test]
fn h_is_zero_exactly_on_acyclic_supports() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let d = 5;
        let perm = {
            let mut p: Vec<usize> = (0..d).collect();
            for i in (1..d).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        };
        let vals: Vec<f64> = (0..d * d)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(0.2..1.0) } else { 0.0 })
            .collect();
        let w = SquareMatrix::<f64>::from_fn(d, |i, j| if perm[i] < perm[j] { vals[i * d + j] } else { 0.0 });
        assert!(acyclicity_h(&w).0.abs() < 1e-10);
        let mut c = w.clone();
        let (a, b) = (rng.random_range(0..d), rng.random_range(0..d));
        if a != b {
            c[(a, b)] = 0.5;
            c[(b, a)] = 0.5;
            assert!(acyclicity_h(&c).0 > 1e-3);
        }
    }
}

#[test]
fn notears_recovers_gaussian_chain() {
    let fit = notears_learn(&gaussian_chain(4, 2000, 0.9, 1), &NotearsConfig { lambda: 0.05, ..Default::default() }).unwrap();
    assert!(fit.h <= 1e-8);
    let edges = fit.dag.edge_labels();
    for i in 0..3 {
        assert!(edges.contains(&(format!("x{i}"), format!("x{}", i + 1))), "{edges:?}");
    }
    assert_eq!(edges.len(), 3, "{edges:?}");
}

#[test]
fn notears_f32_matches_f64_structure() {
    let d64 = gaussian_chain(3, 1000, 0.9, 2);
    let d32 = ContinuousData::<f32>::new(
        d64.labels().to_vec(),
        (0..3).map(|c| d64.column(c).iter().map(|&v| v as f32).collect()).collect(),
    )
    .unwrap();
    let cfg = NotearsConfig { lambda: 0.05, h_tol: 1e-6, ..Default::default() };
    let a = notears_learn(&d64, &cfg).unwrap();
    let b = notears_learn(&d32, &cfg).unwrap();
    assert_eq!(a.dag.edge_labels(), b.dag.edge_labels());
}

#[test]
fn notears_rejects_non_finite() {
    assert!(matches!(
        ContinuousData::new(names(&["a"]), vec![vec![1.0, f64::NAN]]),
        Err(DiscoveryError::NonFinite)
    ));
}

#[test]
fn stability_independent_columns_empty() {
    let cfg = StabilityConfig { n_resamples: 20, ..Default::default() };
    let (dag, report) = stability_select(&gaussian_independent(5, 2000, 3), &cfg, 7).unwrap();
    assert_eq!(dag.n_edges(), 0, "{:?}", report.stable_edges);
    assert!(report.edge_frequencies.iter().flat_map(|e| &e.frequencies).all(|&f| (0.0..=1.0).contains(&f)));
}

#[test]
fn stability_recovers_chain() {
    let cfg = StabilityConfig { n_resamples: 20, ..Default::default() };
    let mut hits = 0;
    for seed in 0..5 {
        let (dag, _) = stability_select(&gaussian_chain(5, 2000, 0.9, 50 + seed), &cfg, seed).unwrap();
        let want: Vec<(String, String)> = (0..4).map(|i| (format!("x{i}"), format!("x{}", i + 1))).collect();
        if dag.edge_labels() == want {
            hits += 1;
        }
    }
    assert!(hits >= 5, "{hits}/5");
}

#[test]
fn stability_single_point_matches_notears() {
    let data = gaussian_chain(4, 800, 0.9, 4);
    let notears = NotearsConfig { lambda: 0.05, ..Default::default() };
    let cfg = StabilityConfig {
        lambda_grid: vec![0.05],
        n_resamples: 1,
        subsample_frac: 1.0,
        notears: notears.clone(),
        ..Default::default()
    };
    let (dag, _) = stability_select(&data, &cfg, 1).unwrap();
    assert_eq!(dag.edge_labels(), notears_learn(&data, &notears).unwrap().dag.edge_labels());
}

#[test]
fn stability_is_deterministic() {
    let cfg = StabilityConfig { n_resamples: 6, lambda_grid: log_grid(1e-2, 1.0, 5), ..Default::default() };
    let data = gaussian_chain(3, 500, 0.9, 5);
    let a = stability_select(&data, &cfg, 42).unwrap().1;
    let b = stability_select(&data, &cfg, 42).unwrap().1;
    assert_eq!(a, b);
}

#[test]
fn fisher_and_g2_on_linked_sites() {
    let t = ContingencyTable { a: "x".into(), b: "y".into(), n00: 82, n01: 144, n10: 39, n11: 304 };
    assert!(fisher_exact(&t).unwrap() < 1e-6);
}

#[test]
fn g2_identical_columns() {
    let m = coins(1, 100, 1);
    let col: Vec<bool> = (0..100).map(|r| m.get(r, 0).value().unwrap()).collect();
    let m = m.with_column("y", &col).unwrap();
    assert!(ci_test_g2(&m, "x0", "y", &[]).unwrap().p_value < 1e-10);
}

#[test]
fn g2_null_p_values_average_half() {
    let mean = (0..200).map(|s| ci_test_g2(&coins(2, 500, 1000 + s), "x0", "x1", &[]).unwrap().p_value).sum::<f64>() / 200.0;
    assert!((mean - 0.5).abs() < 0.06, "{mean}");
}

#[test]
fn learners_are_deterministic() {
    let m = sample(&chain_bn(), 1000, 2);
    for algo in Algorithm::ALL {
        let mut cfg = LearnerConfig::default();
        cfg.stability.n_resamples = 3;
        cfg.stability.lambda_grid = log_grid(1e-2, 1.0, 4);
        let a = learn(&m, algo, &cfg, 9).unwrap();
        let b = learn(&m, algo, &cfg, 9).unwrap();
        assert_eq!(a.dag, b.dag, "{algo}");
    }
}
