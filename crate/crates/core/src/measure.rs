//! Independent product measures over the domain, and interval/box probabilities.

use alloc::vec::Vec;

use crate::domain::{Domain, Interval};
use crate::error::{Error, Result};

/// One-dimensional input distribution. Any continuous law can be added here as
/// long as it provides a CDF; the engine only ever uses CDF differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
}

impl Marginal {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Mass of `iv`, ignoring whether endpoints are open (the law is continuous).
    pub fn prob(&self, iv: &Interval) -> f64 {
        if iv.hi <= iv.lo {
            return 0.0;
        }
        self.cdf(iv.hi) - self.cdf(iv.lo)
    }
}

/// `X_1, ..., X_p` independent, each with its own [`Marginal`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    marginals: Vec<Marginal>,
}

impl ProductMeasure {
    /// Independent uniforms on each margin of `domain`.
    pub fn uniform(domain: &Domain) -> Self {
        ProductMeasure {
            marginals: domain
                .lo()
                .iter()
                .zip(domain.hi())
                .map(|(&lo, &hi)| Marginal::Uniform { lo, hi })
                .collect(),
        }
    }

    /// Checks that each marginal's support is exactly the domain margin.
    pub fn new(marginals: Vec<Marginal>, domain: &Domain) -> Result<Self> {
        let m = ProductMeasure { marginals };
        m.check_domain(domain)?;
        Ok(m)
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        if self.marginals.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: self.marginals.len(),
            });
        }
        for (dim, m) in self.marginals.iter().enumerate() {
            let (a, b) = m.support();
            if a != domain.lo()[dim] || b != domain.hi()[dim] {
                return Err(Error::MeasureMismatch { dim });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginal(&self, dim: usize) -> &Marginal {
        &self.marginals[dim]
    }

    /// `P(X_dim in iv)`.
    pub fn interval_prob(&self, dim: usize, iv: &Interval) -> Result<f64> {
        let m = self
            .marginals
            .get(dim)
            .ok_or(Error::DimensionOutOfRange { dim, p: self.dim() })?;
        let (a, b) = m.support();
        if iv.lo < a || iv.hi > b || iv.lo > iv.hi {
            return Err(Error::OutsideSupport {
                dim,
                lo: iv.lo,
                hi: iv.hi,
            });
        }
        Ok(m.prob(iv))
    }

    /// `P(X_P in box)` for the projection `box` of a region onto `dims`.
    /// The empty index set has probability one.
    pub fn box_prob(&self, dims: &[usize], projection: &[Interval]) -> Result<f64> {
        if dims.len() != projection.len() {
            return Err(Error::LengthMismatch {
                left: dims.len(),
                right: projection.len(),
            });
        }
        dims.iter()
            .zip(projection)
            .try_fold(1.0, |acc, (&d, iv)| Ok(acc * self.interval_prob(d, iv)?))
    }
}

/// `a ∩ b` on one dimension, `None` when empty. The top is closed only if the
/// interval attaining the smaller upper end is closed there.
pub fn interval_intersect(a: &Interval, b: &Interval) -> Option<Interval> {
    let lo = a.lo.max(b.lo);
    let (hi, closed) = if a.hi < b.hi {
        (a.hi, a.closed)
    } else if b.hi < a.hi {
        (b.hi, b.closed)
    } else {
        (a.hi, a.closed && b.closed)
    };
    if lo >= hi {
        return None;
    }
    Some(Interval { lo, hi, closed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{fixtures, terminal_regions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn interval_probs() {
        let m = ProductMeasure::uniform(&Domain::unit(2));
        assert!(close(
            m.interval_prob(0, &Interval::half_open(0.2, 0.7)).unwrap(),
            0.5
        ));
        assert_eq!(
            m.interval_prob(1, &Interval::closed(0.0, 1.0)).unwrap(),
            1.0
        );
        let m2 = ProductMeasure::uniform(&Domain::new(alloc::vec![2.0], alloc::vec![6.0]).unwrap());
        assert!(close(
            m2.interval_prob(0, &Interval::half_open(3.0, 4.0)).unwrap(),
            0.25
        ));
        assert!(matches!(
            m2.interval_prob(0, &Interval::half_open(1.0, 4.0)),
            Err(Error::OutsideSupport { .. })
        ));
    }

    #[test]
    fn box_probs() {
        let m = ProductMeasure::uniform(&Domain::unit(2));
        let b = [Interval::half_open(0.0, 0.5), Interval::half_open(0.0, 0.5)];
        assert!(close(m.box_prob(&[0, 1], &b).unwrap(), 0.25));
        assert_eq!(m.box_prob(&[], &[]).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_measure_rejected() {
        let d = Domain::unit(2);
        let bad = alloc::vec![
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Marginal::Uniform { lo: 0.0, hi: 2.0 }
        ];
        assert_eq!(
            ProductMeasure::new(bad, &d).unwrap_err(),
            Error::MeasureMismatch { dim: 1 }
        );
    }

    #[test]
    fn intersections() {
        let a = Interval::half_open(0.0, 0.5);
        let b = Interval::closed(0.3, 1.0);
        assert_eq!(
            interval_intersect(&a, &b),
            Some(Interval::half_open(0.3, 0.5))
        );
        assert_eq!(interval_intersect(&Interval::half_open(0.0, 0.3), &b), None);
        assert_eq!(interval_intersect(&b, &b), Some(b));
        assert_eq!(interval_intersect(&a, &a), Some(a));
    }

    #[test]
    fn box_prob_vs_monte_carlo() {
        let m = ProductMeasure::uniform(&Domain::unit(3));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let ivs: alloc::vec::Vec<Interval> = (0..3)
                .map(|_| {
                    let a: f64 = rng.random();
                    let b: f64 = rng.random();
                    Interval::half_open(a.min(b), a.max(b))
                })
                .collect();
            let p = m.box_prob(&[0, 1, 2], &ivs).unwrap();
            let n = 100_000;
            let mut hits = 0usize;
            for _ in 0..n {
                let x: [f64; 3] = [rng.random(), rng.random(), rng.random()];
                if ivs.iter().zip(x).all(|(iv, v)| iv.contains(v)) {
                    hits += 1;
                }
            }
            let freq = hits as f64 / n as f64;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 4.0 * sd + 1e-9, "{freq} vs {p}");
        }
    }

    #[test]
    fn region_probs_sum_to_one() {
        let ens = fixtures::two_tree_ensemble();
        let m = ProductMeasure::uniform(ens.domain());
        for t in ens.trees() {
            let total: f64 = terminal_regions(t, ens.domain())
                .unwrap()
                .iter()
                .map(|r| m.box_prob(&[0, 1], &r.bounds).unwrap())
                .sum();
            assert!(close(total, 1.0));
        }
    }

    proptest! {
        #[test]
        fn additive_and_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            let m = ProductMeasure::uniform(&Domain::unit(1));
            let left = m.interval_prob(0, &Interval::half_open(v[0], v[1])).unwrap();
            let right = m.interval_prob(0, &Interval::half_open(v[1], v[2])).unwrap();
            let whole = m.interval_prob(0, &Interval::half_open(v[0], v[2])).unwrap();
            prop_assert!((left + right - whole).abs() < 1e-12);
            prop_assert!(left <= whole + 1e-15 && right <= whole + 1e-15);
        }
    }
}
