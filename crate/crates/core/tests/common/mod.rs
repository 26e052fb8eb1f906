#![allow(dead_code)]

use eventchron::bayesnet::{Cpt, Dag, DiscreteBayesNet};
use eventchron::dataset::EventMatrix;
use eventchron::discovery::ContinuousData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// A → B → C with P(child=1 | parent=1) = 0.9 and P(child=1 | parent=0) = 0.1.
pub fn chain_bn() -> DiscreteBayesNet<f64> {
    let dag = Dag::new(names(&["A", "B", "C"]), &[("A", "B"), ("B", "C")]).unwrap();
    DiscreteBayesNet::new(
        dag,
        vec![
            Cpt::new("A", vec![], vec![0.5]).unwrap(),
            Cpt::new("B", names(&["A"]), vec![0.1, 0.9]).unwrap(),
            Cpt::new("C", names(&["B"]), vec![0.1, 0.9]).unwrap(),
        ],
    )
    .unwrap()
}

/// Independent fair coins.
pub fn coins(d: usize, n: usize, seed: u64) -> EventMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let rows: Vec<Vec<u8>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0..2u8)).collect()).collect();
    EventMatrix::from_bits(labels, &rows).unwrap()
}

/// Linear Gaussian chain x_{i+1} = coef·x_i + N(0, 1).
pub fn gaussian_chain(d: usize, n: usize, coef: f64, seed: u64) -> ContinuousData<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut cols = vec![vec![0.0; n]; d];
    for r in 0..n {
        for i in 0..d {
            let parent = if i == 0 { 0.0 } else { coef * cols[i - 1][r] };
            cols[i][r] = parent + normal.sample(&mut rng);
        }
    }
    ContinuousData::new((0..d).map(|i| format!("x{i}")).collect(), cols).unwrap()
}

pub fn gaussian_independent(d: usize, n: usize, seed: u64) -> ContinuousData<f64> {
    gaussian_chain(d, n, 0.0, seed)
}

/// Random DAG over `x0..x{d-1}` (edges only forward in index order) with
/// CPT entries drawn uniformly from [0.05, 0.95].
pub fn random_network(d: usize, p_edge: f64, seed: u64) -> DiscreteBayesNet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let mut edges = Vec::new();
    for j in 0..d {
        for i in 0..j {
            if rng.random_bool(p_edge) {
                edges.push((i, j));
            }
        }
    }
    let dag = Dag::from_indices(labels.clone(), &edges).unwrap();
    let cpts = (0..d)
        .map(|v| {
            let parents: Vec<String> = dag.parents(v).iter().map(|&p| labels[p].clone()).collect();
            let p1 = (0..1usize << parents.len()).map(|_| rng.random_range(0.05..0.95)).collect();
            Cpt::new(labels[v].clone(), parents, p1).unwrap()
        })
        .collect();
    DiscreteBayesNet::new(dag, cpts).unwrap()
}

/// Σ over full assignments satisfying `event` of the joint probability,
/// with node `x` clamped to `v` when `intervention` is given.
pub fn enumerate(bn: &DiscreteBayesNet<f64>, intervention: Option<(usize, bool)>, event: impl Fn(&[bool]) -> bool) -> f64 {
    let d = bn.dag().n_nodes();
    let mut total = 0.0;
    for bits in 0u64..1 << d {
        let a: Vec<bool> = (0..d).map(|i| bits >> i & 1 == 1).collect();
        if !event(&a) {
            continue;
        }
        let mut p = 1.0;
        for v in 0..d {
            p *= match intervention {
                Some((x, val)) if x == v => f64::from(u8::from(a[v] == val)),
                _ => bn.p_given(v, a[v], &a),
            };
        }
        total += p;
    }
    total
}

/// E[y | do(x=1)] − E[y | do(x=0)] by enumeration.
pub fn enumerated_ace(bn: &DiscreteBayesNet<f64>, x: usize, y: usize) -> f64 {
    enumerate(bn, Some((x, true)), |a| a[y]) - enumerate(bn, Some((x, false)), |a| a[y])
}
