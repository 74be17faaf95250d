//! Competition rankings and the sequential discordance discrepancy between a
//! reference ranking and an estimated one.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Standard competition ranking: rank 1 is the most active item, tied items
/// share the smallest rank of their group, and the next group skips ahead.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    /// Validates that `ranks` is attainable by ranking some real vector.
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::EmptyRanking);
        }
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        let mut start = 0;
        for (pos, &r) in sorted.iter().enumerate() {
            if pos > 0 && r != sorted[pos - 1] {
                start = pos;
            }
            if r != start + 1 {
                return Err(Error::InvalidRanking);
            }
        }
        Ok(Ranking(ranks))
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Size of the group tied for last place.
    pub fn bottom_tie_size(&self) -> usize {
        let worst = *self.0.iter().max().unwrap();
        self.0.iter().filter(|&&r| r == worst).count()
    }

    /// Largest `d_r` any estimated ranking can reach against `self` as truth.
    pub fn max_discrepancy(&self) -> usize {
        let q = self.len();
        let u = self.bottom_tie_size();
        2 * (1..=q - u).map(|k| q - k).sum::<usize>()
    }
}

/// Ranks `values` so that larger values get smaller rank numbers. Values within
/// `tie_tol` of their sorted neighbour are chained into one tie group.
pub fn competition_rank(values: &[f64], tie_tol: f64) -> Result<Ranking> {
    if values.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut ranks = alloc::vec![0; values.len()];
    let mut group_rank = 1;
    for (pos, &idx) in order.iter().enumerate() {
        if pos > 0 && values[order[pos - 1]] - values[idx] > tie_tol {
            group_rank = pos + 1;
        }
        ranks[idx] = group_rank;
    }
    Ok(Ranking(ranks))
}

fn check_pair(a: &Ranking, b: &Ranking) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Discordances `W_1..W_q` of `estimate` relative to `truth`.
///
/// At each stage the remaining items tied for most active under `truth` are
/// located in `estimate` restricted to the remaining items; `W_k` is the best
/// such position minus one, and an item attaining it is removed (the lowest
/// index when several do).
pub fn discordances(truth: &Ranking, estimate: &Ranking) -> Result<Vec<usize>> {
    check_pair(truth, estimate)?;
    let (f, e) = (truth.ranks(), estimate.ranks());
    let q = f.len();
    let mut remaining: Vec<usize> = (0..q).collect();
    let mut w = Vec::with_capacity(q);
    while !remaining.is_empty() {
        let top = remaining.iter().map(|&i| f[i]).min().unwrap();
        let mut best = (usize::MAX, 0);
        for (slot, &c) in remaining.iter().enumerate() {
            if f[c] != top {
                continue;
            }
            let ahead = remaining.iter().filter(|&&r| e[r] < e[c]).count();
            if ahead < best.0 {
                best = (ahead, slot);
            }
        }
        w.push(best.0);
        remaining.remove(best.1);
    }
    Ok(w)
}

/// `d_r = 2 * sum_k W_k`.
pub fn d_r(truth: &Ranking, estimate: &Ranking) -> Result<usize> {
    Ok(2 * discordances(truth, estimate)?.iter().sum::<usize>())
}

/// Kemeny-Snell distance `1/2 sum_ij |A_ij - B_ij|` with
/// `A_ij = sign(a_j - a_i)`, ties scoring zero.
pub fn kemeny_snell(a: &Ranking, b: &Ranking) -> Result<usize> {
    check_pair(a, b)?;
    let sign = |x: usize, y: usize| (y as i64 - x as i64).signum();
    let (ra, rb) = (a.ranks(), b.ranks());
    let mut total = 0;
    for i in 0..ra.len() {
        for j in 0..ra.len() {
            total += (sign(ra[i], ra[j]) - sign(rb[i], rb[j])).unsigned_abs() as usize;
        }
    }
    Ok(total / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ranking_examples() {
        let x = competition_rank(&[0.1, 0.1, 0.2, 0.2, 0.35, 0.05], 0.0).unwrap();
        assert_eq!(x.ranks(), &[4, 4, 2, 2, 1, 6]);
        let fr = competition_rank(&[0.197, 0.197, 0.093, 0.350, 0.087], 1e-12).unwrap();
        assert_eq!(fr.ranks(), &[2, 2, 4, 1, 5]);
        assert_eq!(
            competition_rank(&[3.0; 4], 0.0).unwrap().ranks(),
            &[1, 1, 1, 1]
        );
        assert!(competition_rank(&[], 0.0).is_err());
    }

    #[test]
    fn tie_tolerance_chains() {
        let x = competition_rank(&[1.0, 1.0 + 5e-13, 1.0 + 1e-12, 2.0], 6e-13).unwrap();
        assert_eq!(x.ranks(), &[2, 2, 2, 1]);
    }

    #[test]
    fn validation() {
        assert!(Ranking::new(vec![1, 1, 3]).is_ok());
        assert!(Ranking::new(vec![1, 2, 2, 4]).is_ok());
        assert_eq!(
            Ranking::new(vec![1, 1, 2]).unwrap_err(),
            Error::InvalidRanking
        );
        assert_eq!(Ranking::new(vec![2, 3]).unwrap_err(), Error::InvalidRanking);
        assert_eq!(Ranking::new(vec![]).unwrap_err(), Error::EmptyRanking);
    }

    #[test]
    fn worked_example() {
        let f = r(&[4, 3, 1, 2]);
        let e = r(&[3, 1, 2, 4]);
        assert_eq!(discordances(&f, &e).unwrap(), vec![1, 2, 0, 0]);
        assert_eq!(d_r(&f, &e).unwrap(), 6);
        assert_eq!(kemeny_snell(&f, &e).unwrap(), 6);
    }

    #[test]
    fn trivial_cases() {
        let f = r(&[2, 1, 3]);
        assert_eq!(d_r(&f, &f).unwrap(), 0);
        assert_eq!(kemeny_snell(&f, &f).unwrap(), 0);
        let tied = r(&[1, 1, 1]);
        assert_eq!(discordances(&tied, &f).unwrap(), vec![0, 0, 0]);
        assert_eq!(kemeny_snell(&r(&[1, 1]), &r(&[1, 2])).unwrap(), 1);
        assert!(d_r(&f, &r(&[1, 2])).is_err());
    }

    #[test]
    fn reversed_rankings() {
        for q in 1..=6 {
            let up: Vec<usize> = (1..=q).collect();
            let down: Vec<usize> = (1..=q).rev().collect();
            assert_eq!(d_r(&r(&up), &r(&down)).unwrap(), q * (q - 1));
        }
    }

    #[test]
    fn max_discrepancy_matches_table_layout() {
        assert_eq!(r(&[2, 2, 4, 1, 5]).max_discrepancy(), 20);
        let ten =
            competition_rank(&[0.2, 0.2, 0.1, 0.35, 0.09, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(ten.max_discrepancy(), 70);
    }
}
