use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treesobol_core::{competition_rank, d_r, discordances, kemeny_snell, Ranking};

fn permutations(q: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(cur.clone());
            return;
        }
        for k in 0..left.len() {
            let x = left.remove(k);
            cur.push(x);
            rec(cur, left, out);
            cur.pop();
            left.insert(k, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (1..=q).collect(), &mut out);
    out
}

fn untied(rng: &mut ChaCha8Rng, q: usize) -> Ranking {
    let mut v: Vec<usize> = (1..=q).collect();
    v.shuffle(rng);
    Ranking::new(v).unwrap()
}

/// Ranking of `q` values drawn from a few levels, so ties are common.
fn tied(rng: &mut ChaCha8Rng, q: usize, levels: u32) -> (Vec<f64>, Ranking) {
    let vals: Vec<f64> = (0..q)
        .map(|_| rng.random_range(1..=levels) as f64)
        .collect();
    let r = competition_rank(&vals, 0.0).unwrap();
    (vals, r)
}

#[test]
fn equals_kemeny_snell_exhaustively() {
    for q in 1..=5 {
        let perms = permutations(q);
        for a in &perms {
            for b in &perms {
                let (a, b) = (
                    Ranking::new(a.clone()).unwrap(),
                    Ranking::new(b.clone()).unwrap(),
                );
                assert_eq!(d_r(&a, &b).unwrap(), kemeny_snell(&a, &b).unwrap());
            }
        }
    }
}

#[test]
fn equals_kemeny_snell_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10_000 {
        let q = rng.random_range(1..=8);
        let (a, b) = (untied(&mut rng, q), untied(&mut rng, q));
        assert_eq!(d_r(&a, &b).unwrap(), kemeny_snell(&a, &b).unwrap());
    }
}

#[test]
fn metric_on_untied_rankings() {
    for q in 1..=5 {
        let perms: Vec<Ranking> = permutations(q)
            .into_iter()
            .map(|p| Ranking::new(p).unwrap())
            .collect();
        let n = perms.len();
        let mut d = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = d_r(&perms[i], &perms[j]).unwrap();
            }
        }
        for i in 0..n {
            assert_eq!(d[i * n + i], 0);
            for j in 0..n {
                assert_eq!(d[i * n + j], d[j * n + i]);
                for k in 0..n {
                    assert!(d[i * n + k] <= d[i * n + j] + d[j * n + k]);
                }
            }
        }
    }
}

#[test]
fn inert_items_appended_below() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let q0 = rng.random_range(1..=6);
        let extra = rng.random_range(1..=6);
        let (f_vals, f) = tied(&mut rng, q0, 4);
        let e_vals: Vec<f64> = (0..q0).map(|_| rng.random_range(1.0..2.0)).collect();
        let e = competition_rank(&e_vals, 0.0).unwrap();
        let base = discordances(&f, &e).unwrap();

        let mut f_big = f_vals.clone();
        f_big.extend(std::iter::repeat_n(0.0, extra));
        let f_big = competition_rank(&f_big, 0.0).unwrap();

        // inert items below every active one in the estimate, any order among themselves
        let mut e_big = e_vals.clone();
        e_big.extend((0..extra).map(|_| rng.random_range(0.0..1.0)));
        let e_big = competition_rank(&e_big, 0.0).unwrap();
        let w = discordances(&f_big, &e_big).unwrap();
        assert_eq!(&w[..q0], &base[..]);
        assert!(w[q0..].iter().all(|&x| x == 0));
        assert_eq!(d_r(&f_big, &e_big).unwrap(), d_r(&f, &e).unwrap());

        // inert items anywhere in the estimate: the tail still contributes nothing
        let mixed: Vec<f64> = (0..q0 + extra)
            .map(|_| rng.random_range(0.0..2.0))
            .collect();
        let mixed = competition_rank(&mixed, 0.0).unwrap();
        let w = discordances(&f_big, &mixed).unwrap();
        assert!(w[q0..].iter().all(|&x| x == 0));
    }
}

#[test]
fn permuting_within_truth_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..1000 {
        let q = rng.random_range(2..=8);
        let (_, f) = tied(&mut rng, q, 3);
        let e = untied(&mut rng, q);
        let before = d_r(&f, &e).unwrap();
        // pick a tie group of the truth and shuffle the estimate's ranks inside it
        let pick = f.ranks()[rng.random_range(0..q)];
        let members: Vec<usize> = (0..q).filter(|&i| f.ranks()[i] == pick).collect();
        let mut ranks: Vec<usize> = members.iter().map(|&i| e.ranks()[i]).collect();
        ranks.shuffle(&mut rng);
        let mut permuted = e.ranks().to_vec();
        for (&i, r) in members.iter().zip(ranks) {
            permuted[i] = r;
        }
        let permuted = Ranking::new(permuted).unwrap();
        assert_eq!(d_r(&f, &permuted).unwrap(), before);
    }
}

#[test]
fn discrepancy_never_exceeds_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..2000 {
        let q = rng.random_range(1..=8);
        let (_, f) = tied(&mut rng, q, 4);
        let (_, e) = tied(&mut rng, q, 8);
        let d = d_r(&f, &e).unwrap();
        assert!(d <= f.max_discrepancy());
        assert_eq!(d % 2, 0);
    }
    // the bound is attained by reversing the truth
    let f = competition_rank(&[5.0, 4.0, 3.0, 3.0], 0.0).unwrap();
    let e = competition_rank(&[1.0, 2.0, 3.0, 4.0], 0.0).unwrap();
    assert_eq!(d_r(&f, &e).unwrap(), f.max_discrepancy());
}
