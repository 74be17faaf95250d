use proptest::prelude::*;
use treesobol::lhd::{maximin_lhd, min_distance};

fn is_latin(x: &[Vec<f64>]) -> bool {
    let n = x.len();
    let p = x[0].len();
    (0..p).all(|j| {
        let mut seen = vec![false; n];
        for row in x {
            let k = (row[j] * n as f64).floor() as usize;
            if k >= n || seen[k] {
                return false;
            }
            seen[k] = true;
        }
        true
    })
}

#[test]
fn four_by_two() {
    let x = maximin_lhd(4, 2, 1, 1).unwrap();
    assert_eq!(x.len(), 4);
    assert!(is_latin(&x));
}

#[test]
fn more_restarts_never_worse() {
    for seed in 0..20 {
        let one = maximin_lhd(12, 3, seed, 1).unwrap();
        let many = maximin_lhd(12, 3, seed, 50).unwrap();
        assert!(min_distance(&many) >= min_distance(&one));
    }
}

#[test]
fn deterministic_and_validated() {
    assert_eq!(
        maximin_lhd(30, 4, 7, 20).unwrap(),
        maximin_lhd(30, 4, 7, 20).unwrap()
    );
    assert_ne!(
        maximin_lhd(30, 4, 7, 20).unwrap(),
        maximin_lhd(30, 4, 8, 20).unwrap()
    );
    assert!(maximin_lhd(1, 2, 0, 10).is_err());
}

proptest! {
    #[test]
    fn one_point_per_stratum(n in 2usize..60, p in 1usize..6, seed in any::<u64>()) {
        let x = maximin_lhd(n, p, seed, 3).unwrap();
        prop_assert!(x.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        prop_assert!(is_latin(&x));
    }
}
