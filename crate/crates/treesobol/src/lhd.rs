//! Maximin Latin hypercube designs by random restarts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 100;

/// One random Latin hypercube: column `j` places one point uniformly inside
/// each stratum `[k/n, (k+1)/n)`, in shuffled order.
pub fn random_lhd<R: Rng>(rng: &mut R, n: usize, p: usize) -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0; p]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..p {
        perm.shuffle(rng);
        for (row, &k) in x.iter_mut().zip(&perm) {
            let u: f64 = rng.random();
            // stay strictly below the upper stratum edge after rounding
            row[j] = ((k as f64 + u) / n as f64).min((k + 1) as f64 / n as f64 - f64::EPSILON);
        }
    }
    x
}

/// Smallest Euclidean distance between two rows.
pub fn min_distance(x: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let d: f64 = x[a].iter().zip(&x[b]).map(|(u, v)| (u - v) * (u - v)).sum();
            best = best.min(d);
        }
    }
    best.sqrt()
}

/// Best of `restarts` random Latin hypercubes by minimum pairwise distance.
/// Candidates come from one seeded stream, so a longer run always considers
/// the candidates of a shorter one.
pub fn maximin_lhd(n: usize, p: usize, seed: u64, restarts: usize) -> Result<Vec<Vec<f64>>> {
    if n < 2 || p == 0 {
        return Err(Error::Config(format!(
            "LHD needs n >= 2 and p >= 1, got n={n}, p={p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = random_lhd(&mut rng, n, p);
    if restarts <= 1 {
        return Ok(best);
    }
    let mut best_d = min_distance(&best);
    for _ in 1..restarts {
        let cand = random_lhd(&mut rng, n, p);
        let d = min_distance(&cand);
        if d > best_d {
            best = cand;
            best_d = d;
        }
    }
    Ok(best)
}
