//! Split-count activity measures and the one-dimensional conditional mean
//! that connects them to first-order Sobol' indices.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{Ensemble, Interval};
use crate::error::{Error, Result};
use crate::measure::ProductMeasure;

/// Default absolute tolerance for [`jump_count`].
pub const DEFAULT_JUMP_TOL: f64 = 1e-12;

/// Internal nodes per dimension, summed over trees, duplicates included.
pub fn one_way_counts(ens: &Ensemble) -> Vec<usize> {
    let mut counts = vec![0; ens.dim()];
    for t in ens.trees() {
        t.for_each_rule(|r| counts[r.dim] += 1);
    }
    counts
}

/// Distinct split rules per dimension across the whole ensemble.
pub fn unique_rule_counts(ens: &Ensemble) -> Vec<usize> {
    (0..ens.dim())
        .map(|i| ens.unique_cutpoints(i).len())
        .collect()
}

/// A step function of one input: `values[k]` on `[breakpoints[k], breakpoints[k + 1])`,
/// the last cell closed on top.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant1D {
    dim: usize,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant1D {
    pub fn new(dim: usize, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::TooFewCells);
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::LengthMismatch {
                left: breakpoints.len() - 1,
                right: values.len(),
            });
        }
        if let Some(w) = breakpoints
            .windows(2)
            .find(|w| w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less))
        {
            return Err(Error::InvalidMargin {
                dim,
                lo: w[0],
                hi: w[1],
            });
        }
        Ok(PiecewiseConstant1D {
            dim,
            breakpoints,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn cell(&self, k: usize) -> Interval {
        let (lo, hi) = (self.breakpoints[k], self.breakpoints[k + 1]);
        if k + 1 == self.values.len() {
            Interval::closed(lo, hi)
        } else {
            Interval::half_open(lo, hi)
        }
    }

    /// Value at `x`, `None` outside the margin.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (a, b) = (self.breakpoints[0], *self.breakpoints.last().unwrap());
        if !(a <= x && x <= b) {
            return None;
        }
        let k = self.breakpoints[1..].partition_point(|&c| c <= x);
        Some(self.values[k.min(self.values.len() - 1)])
    }

    /// Probability of each cell under the marginal of `measure` on this dimension.
    pub fn cell_probs(&self, measure: &ProductMeasure) -> Result<Vec<f64>> {
        (0..self.n_cells())
            .map(|k| measure.interval_prob(self.dim, &self.cell(k)))
            .collect()
    }

    pub fn mean(&self, measure: &ProductMeasure) -> Result<f64> {
        let probs = self.cell_probs(measure)?;
        Ok(probs.iter().zip(&self.values).map(|(p, v)| p * v).sum())
    }

    /// Variance under the marginal, computed around the mean.
    pub fn variance(&self, measure: &ProductMeasure) -> Result<f64> {
        let probs = self.cell_probs(measure)?;
        Ok(weighted_variance(&probs, &self.values))
    }
}

fn weighted_variance(probs: &[f64], values: &[f64]) -> f64 {
    let mean: f64 = probs.iter().zip(values).map(|(p, v)| p * v).sum();
    probs
        .iter()
        .zip(values)
        .map(|(p, v)| p * (v - mean) * (v - mean))
        .sum()
}

/// `E[f(X) | X_i]` as a step function over the unique cutpoints of dimension `i`.
///
/// Each terminal node contributes `mu_k` times the probability of its box on
/// every other dimension, on the cells its `i`-th interval covers. Nodes that
/// never split on `i` cover every cell and shift the whole function.
pub fn cond_expect_1d(
    ens: &Ensemble,
    measure: &ProductMeasure,
    i: usize,
) -> Result<PiecewiseConstant1D> {
    measure.check_domain(ens.domain())?;
    let p = ens.dim();
    if i >= p {
        return Err(Error::DimensionOutOfRange { dim: i, p });
    }
    let margin = ens.domain().margin(i);
    let mut breakpoints = vec![margin.lo];
    breakpoints.extend(ens.unique_cutpoints(i));
    breakpoints.push(margin.hi);
    let mut values = vec![0.0; breakpoints.len() - 1];
    for regions in ens.regions() {
        for r in regions {
            let mut d = r.mu;
            for j in (0..p).filter(|&j| j != i) {
                d *= measure.interval_prob(j, &r.bounds[j])?;
            }
            let iv = r.bounds[i];
            for (k, v) in values.iter_mut().enumerate() {
                if iv.lo <= breakpoints[k] && breakpoints[k + 1] <= iv.hi {
                    *v += d;
                }
            }
        }
    }
    PiecewiseConstant1D::new(i, breakpoints, values)
}

/// Adjacent cells whose values differ by more than `tol`.
pub fn jump_count(f: &PiecewiseConstant1D, tol: f64) -> usize {
    f.values
        .windows(2)
        .filter(|w| (w[1] - w[0]).abs() > tol)
        .count()
}

/// Levels rescaled to mean zero and corrected sample variance equal to the
/// number of cells, with equal mass on every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub function: PiecewiseConstant1D,
    pub masses: Vec<f64>,
}

impl Standardized {
    /// Variance of the standardized levels under the equal cell masses.
    pub fn variance(&self) -> f64 {
        weighted_variance(&self.masses, &self.function.values)
    }
}

/// `e~ = sqrt(K) (e - mean(e)) / s` over the `K` cells, with `s` the corrected
/// sample standard deviation of the levels. Requires pairwise distinct levels.
pub fn standardize(f: &PiecewiseConstant1D) -> Result<Standardized> {
    let k = f.n_cells();
    if k < 2 {
        return Err(Error::TooFewCells);
    }
    let mut sorted = f.values.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicateLevels);
    }
    let kf = k as f64;
    let mean = f.values.iter().sum::<f64>() / kf;
    let ss: f64 = f.values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let s = libm::sqrt(ss / (kf - 1.0));
    let scale = libm::sqrt(kf) / s;
    let values = f.values.iter().map(|v| scale * (v - mean)).collect();
    Ok(Standardized {
        function: PiecewiseConstant1D::new(f.dim, f.breakpoints.clone(), values)?,
        masses: vec![1.0 / kf; k],
    })
}
