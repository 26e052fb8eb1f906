mod common;

use eventchron::bayesnet::{fit_cpts, sample, Cpt, Dag, DiscreteBayesNet};
use eventchron::causal::{
    ace, ace_surgery, backdoor_set, effects_for_dag, estimate, mediators, nde, nde_with_mediators, refute,
    CausalError, CausalRelationTable, EffectsConfig, EstimandKind, RefutationConfig, RefutationKind,
};
use proptest::prelude::*;

use common::{chain_bn, enumerate, enumerated_ace, names, random_network};

/// Z → X, Z → M, Z → Y, X → M, X → Y, M → Y.
fn confounded_mediation() -> DiscreteBayesNet<f64> {
    let dag = Dag::new(
        names(&["Z", "X", "M", "Y"]),
        &[("Z", "X"), ("Z", "M"), ("Z", "Y"), ("X", "M"), ("X", "Y"), ("M", "Y")],
    )
    .unwrap();
    let cpt = |n: &str, ps: &[&str], p: Vec<f64>| Cpt::new(n, names(ps), p).unwrap();
    DiscreteBayesNet::new(
        dag,
        vec![
            cpt("Z", &[], vec![0.3]),
            cpt("X", &["Z"], vec![0.2, 0.7]),
            cpt("M", &["Z", "X"], vec![0.1, 0.6, 0.3, 0.9]),
            cpt("Y", &["Z", "X", "M"], vec![0.05, 0.4, 0.3, 0.7, 0.2, 0.5, 0.45, 0.95]),
        ],
    )
    .unwrap()
}

/// Σ_z P(z) Σ_m [P(y|x=1,m,z) − P(y|x=0,m,z)] P(m|x=0,z), from joint enumeration.
fn mediation_oracle(bn: &DiscreteBayesNet<f64>) -> f64 {
    let (z, x, m, y) = (0, 1, 2, 3);
    let cond = |target: usize, given: &[(usize, bool)]| {
        let ev = |a: &[bool]| given.iter().all(|&(v, b)| a[v] == b);
        enumerate(bn, None, |a| ev(a) && a[target]) / enumerate(bn, None, ev)
    };
    let mut total = 0.0;
    for zv in [false, true] {
        let pz = enumerate(bn, None, |a| a[z] == zv);
        for mv in [false, true] {
            let pm = cond(m, &[(x, false), (z, zv)]);
            let pm = if mv { pm } else { 1.0 - pm };
            let diff = cond(y, &[(x, true), (m, mv), (z, zv)]) - cond(y, &[(x, false), (m, mv), (z, zv)]);
            total += pz * pm * diff;
        }
    }
    total
}

#[test]
fn ace_equals_graph_surgery_on_random_networks() {
    let mut edges = 0;
    for seed in 0..100u64 {
        let d = 2 + (seed % 5) as usize;
        let bn = random_network(d, 0.6, seed);
        let g = bn.dag();
        for (p, c) in g.edges() {
            let (x, y) = (g.label(p), g.label(c));
            let a = ace(&bn, x, y).unwrap().value;
            assert!((a - ace_surgery(&bn, x, y).unwrap()).abs() <= 1e-10);
            assert!((a - enumerated_ace(&bn, p, c)).abs() <= 1e-10, "seed {seed} {x}->{y}");
            assert!((a - nde_with_mediators(&bn, x, y, &[]).unwrap()).abs() <= 1e-10);
            edges += 1;
        }
    }
    assert!(edges > 150);
}

#[test]
fn nde_matches_mediation_formula() {
    let bn = confounded_mediation();
    let est = nde(&bn, "X", "Y").unwrap();
    assert_eq!(est.kind, EstimandKind::Nde);
    assert_eq!(est.adjustment_set, names(&["Z"]));
    assert_eq!(est.mediators, names(&["M"]));
    assert!((est.value - mediation_oracle(&bn)).abs() < 1e-12);
    assert_eq!(estimate(&bn, "X", "Y").unwrap().kind, EstimandKind::Nde);
    assert_eq!(estimate(&bn, "X", "M").unwrap().kind, EstimandKind::Ace);
}

#[test]
fn chain_effect_is_cpt_difference() {
    let bn = chain_bn();
    assert!((ace(&bn, "A", "B").unwrap().value - 0.8).abs() < 1e-12);
    assert!((ace_surgery(&bn, "A", "C").unwrap() - 0.64).abs() < 1e-12);
    assert!(matches!(nde(&bn, "A", "B"), Err(CausalError::NoMediators { .. })));
    assert!(matches!(ace(&bn, "A", "C"), Err(CausalError::NotAnEdge { .. })));
    assert!(matches!(ace(&bn, "A", "A"), Err(CausalError::SameNode(_))));
}

#[test]
fn backdoor_and_mediator_sets() {
    let g = confounded_mediation().dag().clone();
    assert_eq!(backdoor_set(&g, "X", "Y").unwrap(), names(&["Z"]));
    assert_eq!(backdoor_set(&g, "Z", "X").unwrap(), Vec::<String>::new());
    assert_eq!(mediators(&g, "X", "Y").unwrap(), names(&["M"]));
    assert!(mediators(&g, "X", "M").unwrap().is_empty());
}

#[test]
fn single_and_double_precision_agree() {
    let bn = random_network(5, 0.6, 77);
    let json = bn.to_json();
    let bn32 = DiscreteBayesNet::<f32>::from_json(&json).unwrap();
    for (p, c) in bn.dag().edges() {
        let (x, y) = (bn.dag().label(p), bn.dag().label(c));
        let a = ace(&bn, x, y).unwrap().value;
        let b = ace(&bn32, x, y).unwrap().value;
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn true_model_passes_refutations() {
    let bn = chain_bn();
    let data = sample(&bn, 5000, 12);
    let fit: DiscreteBayesNet<f64> = fit_cpts(bn.dag(), &data, 1.0).unwrap();
    let est = ace(&fit, "A", "B").unwrap();
    assert!((est.value - 0.8).abs() < 0.03);
    let cfg = RefutationConfig::default();
    for kind in RefutationKind::ALL {
        let r = refute(&fit, &data, &est, kind, &cfg, 3).unwrap();
        assert!(r.passed, "{kind:?}: {r:?}");
    }
}

#[test]
fn effect_table_sorted_and_round_trips() {
    let bn = confounded_mediation();
    let data = sample(&bn, 4000, 5);
    let fit: DiscreteBayesNet<f64> = fit_cpts(bn.dag(), &data, 1.0).unwrap();
    let table = effects_for_dag(&fit, &data, &EffectsConfig::default(), 8);
    assert_eq!(table.rows.len(), 6);
    assert!(table.rows.windows(2).all(|w| w[0].value >= w[1].value));
    let xy = table.rows.iter().find(|r| r.treatment == "X" && r.outcome == "Y").unwrap();
    assert_eq!(xy.kind, EstimandKind::Nde);
    assert!((xy.total_effect.unwrap() - xy.value - xy.nie.unwrap()).abs() < 1e-12);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let back = CausalRelationTable::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.rows.len(), table.rows.len());
    for (a, b) in back.rows.iter().zip(&table.rows) {
        assert_eq!((&a.treatment, &a.outcome, a.validated), (&b.treatment, &b.outcome, b.validated));
        assert!((a.value - b.value).abs() < 1e-12);
    }
    let again = effects_for_dag(&fit, &data, &EffectsConfig::default(), 8);
    assert_eq!(again, table);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn effects_are_bounded_differences(seed in 0u64..100_000, d in 2usize..7) {
        let bn = random_network(d, 0.5, seed);
        for (p, c) in bn.dag().edges() {
            let (x, y) = (bn.dag().label(p), bn.dag().label(c));
            let e = estimate(&bn, x, y).unwrap();
            prop_assert!((-1.0..=1.0).contains(&e.value));
            let direct = nde_with_mediators(&bn, x, y, &[]).unwrap();
            prop_assert!((direct - enumerated_ace(&bn, p, c)).abs() < 1e-10);
        }
    }
}
