//! Reference computations used to check the closed-form engine.
//!
//! [`GridDecomposition`] enumerates the grid induced by every cutpoint of an
//! ensemble; the ensemble is constant on each cell, so conditional variances
//! are exact finite sums over cells. The Monte Carlo estimators work for any
//! function and are only a statistical cross-check.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Domain, Ensemble, Interval};
use crate::error::{Error, Result};
use crate::measure::ProductMeasure;
use crate::sobol::IndexSet;

pub const DEFAULT_CELL_BUDGET: u128 = 10_000_000;
pub const MIN_MC_SAMPLES: usize = 1000;

/// Cutpoint grid of an ensemble with the ensemble value and probability of
/// every cell. Cells are indexed in mixed radix, dimension 0 fastest.
#[derive(Debug, Clone)]
pub struct GridDecomposition {
    breakpoints: Vec<Vec<f64>>,
    cell_probs: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// One cell of a [`GridDecomposition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub bounds: Vec<Interval>,
    pub prob: f64,
    pub value: f64,
}

impl GridDecomposition {
    pub fn new(ens: &Ensemble, measure: &ProductMeasure, budget: u128) -> Result<Self> {
        measure.check_domain(ens.domain())?;
        let p = ens.dim();
        let dom = ens.domain();
        let breakpoints: Vec<Vec<f64>> = (0..p)
            .map(|d| {
                let mut b = vec![dom.lo()[d]];
                b.extend(ens.unique_cutpoints(d));
                b.push(dom.hi()[d]);
                b
            })
            .collect();
        let cells: u128 = breakpoints.iter().map(|b| (b.len() - 1) as u128).product();
        if cells > budget {
            return Err(Error::BudgetExceeded { cells, budget });
        }
        let cell_probs: Vec<Vec<f64>> = breakpoints
            .iter()
            .enumerate()
            .map(|(d, b)| {
                let m = measure.marginal(d);
                b.windows(2)
                    .map(|w| m.prob(&Interval::half_open(w[0], w[1])))
                    .collect()
            })
            .collect();
        let n = cells as usize;
        let mut values = Vec::with_capacity(n);
        let mut mid = vec![0.0; p];
        for idx in 0..n {
            let mut rem = idx;
            for d in 0..p {
                let k = breakpoints[d].len() - 1;
                let a = rem % k;
                rem /= k;
                mid[d] = 0.5 * (breakpoints[d][a] + breakpoints[d][a + 1]);
            }
            values.push(ens.eval_unchecked(&mid));
        }
        Ok(GridDecomposition {
            breakpoints,
            cell_probs,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn breakpoints(&self, d: usize) -> &[f64] {
        &self.breakpoints[d]
    }

    fn digits(&self, mut idx: usize) -> Vec<usize> {
        self.cell_probs
            .iter()
            .map(|c| {
                let a = idx % c.len();
                idx /= c.len();
                a
            })
            .collect()
    }

    fn prob_of(&self, digits: &[usize]) -> f64 {
        digits
            .iter()
            .zip(&self.cell_probs)
            .map(|(&a, c)| c[a])
            .product()
    }

    pub fn cell(&self, idx: usize) -> Cell {
        let digits = self.digits(idx);
        let last = |d: usize| digits[d] + 2 == self.breakpoints[d].len();
        Cell {
            bounds: digits
                .iter()
                .enumerate()
                .map(|(d, &a)| {
                    let (lo, hi) = (self.breakpoints[d][a], self.breakpoints[d][a + 1]);
                    if last(d) {
                        Interval::closed(lo, hi)
                    } else {
                        Interval::half_open(lo, hi)
                    }
                })
                .collect(),
            prob: self.prob_of(&digits),
            value: self.values[idx],
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.n_cells()).map(move |i| self.cell(i))
    }

    pub fn total_prob(&self) -> f64 {
        (0..self.n_cells())
            .map(|i| self.prob_of(&self.digits(i)))
            .sum()
    }

    /// `Var(E[f | X_P])` by summing cell values over the dimensions outside `P`.
    pub fn closed_variance(&self, set: &IndexSet) -> f64 {
        let dims = set.dims();
        if dims.is_empty() {
            return 0.0;
        }
        let mut radix = Vec::with_capacity(dims.len());
        let mut stride = 1;
        for &d in dims {
            radix.push(stride);
            stride *= self.cell_probs[d].len();
        }
        let mut sum = vec![0.0; stride];
        let mut mass = vec![0.0; stride];
        let mut mean = 0.0;
        for idx in 0..self.n_cells() {
            let digits = self.digits(idx);
            let w = self.prob_of(&digits);
            let key: usize = dims.iter().zip(&radix).map(|(&d, r)| digits[d] * r).sum();
            sum[key] += w * self.values[idx];
            mass[key] += w;
            mean += w * self.values[idx];
        }
        sum.iter()
            .zip(&mass)
            .filter(|(_, &w)| w > 0.0)
            .map(|(s, &w)| {
                let e = s / w;
                w * (e - mean) * (e - mean)
            })
            .sum()
    }

    /// `V_P` by inclusion-exclusion over closed variances of subsets.
    pub fn sobol_v(&self, set: &IndexSet) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let mut memo = BTreeMap::new();
        Ok(self.sobol_v_memo(set, &mut memo))
    }

    fn sobol_v_memo(&self, set: &IndexSet, memo: &mut BTreeMap<IndexSet, f64>) -> f64 {
        if let Some(&v) = memo.get(set) {
            return v;
        }
        let mut v = self.closed_variance(set);
        for sub in set.proper_subsets() {
            v -= self.sobol_v_memo(&sub, memo);
        }
        memo.insert(set.clone(), v);
        v
    }
}

/// `V_P` of an ensemble by grid enumeration under the default cell budget.
pub fn grid_sobol_v(ens: &Ensemble, measure: &ProductMeasure, set: &IndexSet) -> Result<f64> {
    GridDecomposition::new(ens, measure, DEFAULT_CELL_BUDGET)?.sobol_v(set)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
}

/// Pick-freeze estimate for one index set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSobol {
    pub variance: f64,
    /// `Var(E[f | X_P])`.
    pub closed: McEstimate,
    /// `closed / variance`.
    pub index: McEstimate,
}

/// First-order and total indices of every input from one pair of designs.
#[derive(Debug, Clone, PartialEq)]
pub struct McIndices {
    pub variance: f64,
    pub first_order: Vec<McEstimate>,
    pub total_effects: Vec<McEstimate>,
}

#[derive(Default, Clone, Copy)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn var(&self) -> f64 {
        self.m2 / (self.n - 1.0)
    }

    fn estimate(&self, scale: f64) -> McEstimate {
        McEstimate {
            value: self.mean / scale,
            se: libm::sqrt(self.var() / self.n) / scale,
        }
    }
}

fn draw_point(rng: &mut ChaCha8Rng, dom: &Domain, out: &mut [f64]) {
    for (d, x) in out.iter_mut().enumerate() {
        let u: f64 = rng.random();
        *x = dom.lo()[d] + u * (dom.hi()[d] - dom.lo()[d]);
    }
}

/// Estimates `Var(E[f | X_P])` under independent uniforms on `dom` with the
/// estimator `mean(f(B) (f(A_B) - f(A)))`, where `A_B` takes the `P` columns
/// from `B` and the rest from `A`. The total variance is pooled over `A` and `B`.
pub fn mc_sobol<F: Fn(&[f64]) -> f64>(
    f: F,
    dom: &Domain,
    set: &IndexSet,
    n: usize,
    seed: u64,
) -> Result<McSobol> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples {
            n,
            min: MIN_MC_SAMPLES,
        });
    }
    let p = dom.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut a, mut b, mut ab) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut z = Welford::default();
    let mut y = Welford::default();
    for _ in 0..n {
        draw_point(&mut rng, dom, &mut a);
        draw_point(&mut rng, dom, &mut b);
        for d in 0..p {
            ab[d] = if set.contains(d) { b[d] } else { a[d] };
        }
        let (fa, fb, fab) = (f(&a), f(&b), f(&ab));
        z.push(fb * (fab - fa));
        y.push(fa);
        y.push(fb);
    }
    let variance = y.var();
    let scale = if variance > 0.0 { variance } else { 1.0 };
    let closed = z.estimate(1.0);
    let index = if variance > 0.0 {
        z.estimate(scale)
    } else {
        McEstimate {
            value: 0.0,
            se: 0.0,
        }
    };
    Ok(McSobol {
        variance,
        closed,
        index,
    })
}

/// All first-order indices (same estimator as [`mc_sobol`]) and total indices
/// (`mean((f(A) - f(A_B^i))^2) / 2`) from `n` rows of `A` and `B`.
pub fn mc_indices<F: Fn(&[f64]) -> f64>(
    f: F,
    dom: &Domain,
    n: usize,
    seed: u64,
) -> Result<McIndices> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples {
            n,
            min: MIN_MC_SAMPLES,
        });
    }
    let p = dom.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut a, mut b) = (vec![0.0; p], vec![0.0; p]);
    let mut first = vec![Welford::default(); p];
    let mut total = vec![Welford::default(); p];
    let mut y = Welford::default();
    for _ in 0..n {
        draw_point(&mut rng, dom, &mut a);
        draw_point(&mut rng, dom, &mut b);
        let (fa, fb) = (f(&a), f(&b));
        y.push(fa);
        y.push(fb);
        for i in 0..p {
            let keep = a[i];
            a[i] = b[i];
            let fab = f(&a);
            a[i] = keep;
            first[i].push(fb * (fab - fa));
            total[i].push(0.5 * (fa - fab) * (fa - fab));
        }
    }
    let variance = y.var();
    let est = |w: &Welford| {
        if variance > 0.0 {
            w.estimate(variance)
        } else {
            McEstimate {
                value: 0.0,
                se: 0.0,
            }
        }
    };
    Ok(McIndices {
        variance,
        first_order: first.iter().map(est).collect(),
        total_effects: total.iter().map(est).collect(),
    })
}

/// Plain Monte Carlo variance of `f` under uniforms on `dom`.
pub fn mc_variance<F: Fn(&[f64]) -> f64>(f: F, dom: &Domain, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; dom.dim()];
    let mut y = Welford::default();
    for _ in 0..n {
        draw_point(&mut rng, dom, &mut x);
        y.push(f(&x));
    }
    y.var()
}
