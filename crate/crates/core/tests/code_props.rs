mod common;

use polydec::code::{parse_alist, CodeModel};
use proptest::prelude::*;

/// Random sparse H with every check of degree ≥ 2.
fn matrix() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (3usize..30, 1usize..12).prop_flat_map(|(n, m)| {
        let row = prop::collection::btree_set(0..n, 2..=n.min(8)).prop_map(|s| s.into_iter().collect::<Vec<_>>());
        (Just(n), prop::collection::vec(row, m))
    })
}

fn dense_syndrome(n: usize, rows: &[Vec<usize>], bits: &[u8]) -> bool {
    let mut h = vec![vec![0u8; n]; rows.len()];
    for (j, r) in rows.iter().enumerate() {
        for &i in r {
            h[j][i] = 1;
        }
    }
    h.iter().all(|row| row.iter().zip(bits).map(|(a, b)| a & b).fold(0, |s, x| s ^ x) == 0)
}

proptest! {
    #[test]
    fn alist_round_trip((n, rows) in matrix()) {
        let code = CodeModel::from_check_rows(n, rows).unwrap();
        let again = parse_alist(&code.to_alist()).unwrap();
        prop_assert_eq!(&again, &code);
        prop_assert_eq!(parse_alist(&again.to_alist()).unwrap(), again);
    }

    #[test]
    fn syndrome_matches_dense_product((n, rows) in matrix(), seed in any::<u64>()) {
        let code = CodeModel::from_check_rows(n, rows.clone()).unwrap();
        let bits: Vec<u8> = (0..n).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        prop_assert_eq!(code.syndrome_ok(&bits).unwrap(), dense_syndrome(n, &rows, &bits));
        prop_assert!(code.syndrome_ok(&vec![0; n]).unwrap());
    }

    #[test]
    fn degrees_are_consistent((n, rows) in matrix()) {
        let code = CodeModel::from_check_rows(n, rows).unwrap();
        let by_check: usize = code.check_degrees().iter().sum();
        let by_var: usize = code.var_degrees().iter().sum();
        prop_assert_eq!(by_check, code.n_edges());
        prop_assert_eq!(by_var, code.n_edges());
    }
}

#[test]
fn mackay_code_shape() {
    let code = common::mackay();
    assert_eq!(code.n_vars(), 96);
    assert_eq!(code.n_checks(), 48);
    assert!(code.check_degrees().iter().all(|&d| d == 6));
    assert!(code.var_degrees().iter().all(|&d| d == 3));
    assert_eq!(code.distinct_check_degrees(), vec![6]);
    assert!((code.rate() - 0.5).abs() < 1e-12);
}

#[test]
fn syndrome_rejects_wrong_length() {
    let code = common::small_code();
    assert!(code.syndrome_ok(&[0; 5]).is_err());
}
