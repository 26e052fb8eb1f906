mod common;

use std::collections::BTreeSet;

use eventchron::dataset::{
    contingency, cooccurrence_counts, exclude_events, missingness_profile, read_reads, write_reads, Cell,
    DatasetError, EventMatrix, TokenSchema,
};
use eventchron::discovery::fisher_exact;
use proptest::prelude::*;

use common::names;

fn repeat(rows: &mut Vec<Vec<Cell>>, row: &[Cell], n: usize) {
    rows.extend(std::iter::repeat_n(row.to_vec(), n));
}

const O: Cell = Cell::One;
const Z: Cell = Cell::Zero;
const M: Cell = Cell::Missing;

#[test]
fn joint_counts_skip_rows_with_either_side_missing() {
    let mut rows = Vec::new();
    repeat(&mut rows, &[Z, Z], 82);
    repeat(&mut rows, &[Z, O], 144);
    repeat(&mut rows, &[O, Z], 39);
    repeat(&mut rows, &[O, O], 304);
    repeat(&mut rows, &[M, O], 17);
    repeat(&mut rows, &[O, M], 5);
    let m = EventMatrix::new(names(&["ndhD_116494", "ndhD_116785"]), rows, "t2").unwrap();
    let t = contingency(&m, "ndhD_116494", "ndhD_116785").unwrap();
    assert_eq!((t.n00, t.n01, t.n10, t.n11), (82, 144, 39, 304));
    assert_eq!(t.total(), 569);
    assert!(fisher_exact(&t).unwrap() < 1e-6);
    assert!(matches!(contingency(&m, "ndhD_116494", "ndhD_116494"), Err(DatasetError::SameLabel(_))));
}

#[test]
fn all_missing_column_gives_empty_table() {
    let m = EventMatrix::new(names(&["a", "b"]), vec![vec![O, M], vec![Z, M]], "").unwrap();
    let t = contingency(&m, "a", "b").unwrap();
    assert!(t.is_empty());
}

#[test]
fn cooccurrence_tallies() {
    let mut rows = Vec::new();
    repeat(&mut rows, &[O, Z, Z], 8);
    repeat(&mut rows, &[O, O, Z], 26);
    repeat(&mut rows, &[O, O, O], 262);
    repeat(&mut rows, &[Z, O, O], 40);
    repeat(&mut rows, &[O, M, O], 11);
    let cols = names(&["ndhD_116290", "ndhD_116494", "ndhD_116785"]);
    let m = EventMatrix::new(cols, rows, "").unwrap();
    let c = cooccurrence_counts(&m, "ndhD_116290").unwrap();
    assert_eq!(c[&vec![]], 8);
    assert_eq!(c[&names(&["ndhD_116494"])], 26);
    assert_eq!(c[&names(&["ndhD_116494", "ndhD_116785"])], 262);
    assert_eq!(c.len(), 3);
}

#[test]
fn tsv_with_raw_call_tokens_parses() {
    let text = "\tev1\tev2\tev3\n1582\tNaN\tTrue\tErr\n7\tFalse\tTrue\tTrue\n";
    let m = read_reads(text.as_bytes(), &TokenSchema::default()).unwrap();
    assert_eq!(m.columns(), &names(&["ev1", "ev2", "ev3"]));
    assert_eq!(m.row(0), &[M, O, Z]);
    let bad = read_reads("a,b\nTrue,maybe\n".as_bytes(), &TokenSchema::default());
    assert!(matches!(bad, Err(DatasetError::UnknownToken { .. })));
}

#[test]
fn excluding_events_drops_columns() {
    let m = EventMatrix::new(names(&["a", "intron", "b"]), vec![vec![O, M, Z]], "").unwrap();
    let kept = exclude_events(&m, &BTreeSet::from(["intron".to_string()])).unwrap();
    assert_eq!(kept.columns(), &names(&["a", "b"]));
    assert!(kept.is_complete());
    assert!(exclude_events(&m, &BTreeSet::from(["zzz".to_string()])).is_err());
}

#[test]
fn profile_counts_blocks() {
    let rows = vec![vec![M, M, O, O], vec![M, O, M, O], vec![O, O, O, O], vec![O, M, M, M]];
    let p = missingness_profile(&EventMatrix::new(names(&["a", "b", "c", "d"]), rows, "").unwrap());
    assert_eq!(p.row_missing_runs, vec![1, 2, 0, 1]);
    assert_eq!(p.row_single_block, vec![true, false, true, true]);
    assert_eq!(p.fully_observed_rows, 1);
    assert_eq!(p.column_missing_fraction, vec![0.5, 0.5, 0.5, 0.25]);
}

fn cell() -> impl Strategy<Value = Cell> {
    prop_oneof![Just(Cell::Zero), Just(Cell::One), Just(Cell::Missing)]
}

fn matrix() -> impl Strategy<Value = EventMatrix> {
    (1usize..6, 1usize..30).prop_flat_map(|(d, n)| {
        proptest::collection::vec(cell(), d * n).prop_map(move |cells| {
            EventMatrix::from_cells((0..d).map(|i| format!("e{i}")).collect(), cells, "").unwrap()
        })
    })
}

proptest! {
    #[test]
    fn write_then_read_is_identity(m in matrix(), tab in any::<bool>()) {
        let mut buf = Vec::new();
        write_reads(&m, &mut buf, if tab { b'\t' } else { b',' }).unwrap();
        let back = read_reads(buf.as_slice(), &TokenSchema::default()).unwrap();
        prop_assert_eq!(back.columns(), m.columns());
        prop_assert_eq!(back.cells(), m.cells());
    }

    #[test]
    fn table_total_is_jointly_observed_rows(m in matrix()) {
        prop_assume!(m.n_cols() >= 2);
        let t = contingency(&m, &m.columns()[0], &m.columns()[1]).unwrap();
        let joint = m.rows().filter(|r| !r[0].is_missing() && !r[1].is_missing()).count() as u64;
        prop_assert_eq!(t.total(), joint);
        let s = contingency(&m, &m.columns()[1], &m.columns()[0]).unwrap();
        prop_assert_eq!(s, t.swapped());
    }

    #[test]
    fn cooccurrence_sums_to_complete_rows_with_target(m in matrix()) {
        let c = cooccurrence_counts(&m, &m.columns()[0]).unwrap();
        let expect = m.rows().filter(|r| r.iter().all(|c| !c.is_missing()) && r[0] == Cell::One).count();
        prop_assert_eq!(c.values().sum::<usize>(), expect);
    }

    #[test]
    fn profile_fully_observed_matches(m in matrix()) {
        let p = missingness_profile(&m);
        let complete = m.rows().filter(|r| r.iter().all(|c| !c.is_missing())).count();
        prop_assert_eq!(p.fully_observed_rows, complete);
        prop_assert!(p.row_missing_runs.iter().zip(&p.row_single_block).all(|(&k, &s)| s == (k <= 1)));
    }
}
