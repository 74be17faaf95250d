//! Closed-form Sobol' indices of a tree ensemble.
//!
//! For an index set `P`, the conditional expectation `E[f(X) | X_P]` is
//! `sum_k d_k 1{X_P in R_k^P}` with `d_k = mu_k * P_{-P}(R_k^{-P})`, so its
//! variance is the double sum
//!
//! ```text
//!   sum_k sum_l d_k d_l [ P_P(R_k^P ∩ R_l^P) - P_P(R_k^P) P_P(R_l^P) ]
//! ```
//!
//! Terminal nodes whose root path never splits on a dimension of `P` have a
//! constant conditional expectation and are dropped before the double sum.
//! `V_P` then follows from the usual inclusion-exclusion recursion over
//! nonempty proper subsets, and `T_i = 1 - Var(E[f|X_{-i}]) / Var(f)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::{Ensemble, Interval};
use crate::error::{Error, Result};
use crate::measure::ProductMeasure;

/// Sorted set of 0-based dimensions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new<I: IntoIterator<Item = usize>>(dims: I, p: usize) -> Result<Self> {
        let mut v: Vec<usize> = dims.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if let Some(&d) = v.iter().find(|&&d| d >= p) {
            return Err(Error::DimensionOutOfRange { dim: d, p });
        }
        Ok(IndexSet(v))
    }

    pub fn single(i: usize, p: usize) -> Result<Self> {
        Self::new([i], p)
    }

    pub fn pair(i: usize, j: usize, p: usize) -> Result<Self> {
        Self::new([i, j], p)
    }

    pub fn full(p: usize) -> Self {
        IndexSet((0..p).collect())
    }

    /// `{0..p} \ {i}`.
    pub fn without(i: usize, p: usize) -> Self {
        IndexSet((0..p).filter(|&j| j != i).collect())
    }

    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, d: usize) -> bool {
        self.0.binary_search(&d).is_ok()
    }

    /// Nonempty proper subsets.
    pub fn proper_subsets(&self) -> Vec<IndexSet> {
        let n = self.0.len();
        assert!(n < 32, "index set too large to enumerate subsets");
        (1u32..(1u32 << n).saturating_sub(1))
            .map(|mask| {
                IndexSet(
                    (0..n)
                        .filter(|b| mask & (1 << b) != 0)
                        .map(|b| self.0[b])
                        .collect(),
                )
            })
            .collect()
    }

    /// Every subset of `{0..p}` with exactly `k` elements, lexicographic.
    pub fn all_of_size(p: usize, k: usize) -> Vec<IndexSet> {
        fn rec(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<IndexSet>) {
            if cur.len() == k {
                out.push(IndexSet(cur.clone()));
                return;
            }
            for d in start..p {
                cur.push(d);
                rec(d + 1, p, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, p, k, &mut Vec::new(), &mut out);
        out
    }

    /// Every nonempty subset of `{0..p}`, ordered by size then lexicographically.
    pub fn all_nonempty(p: usize) -> Vec<IndexSet> {
        (1..=p).flat_map(|k| Self::all_of_size(p, k)).collect()
    }
}

/// 1-based, dash-separated: `{0, 2}` prints as `1-3`.
impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, d) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", d + 1)?;
        }
        Ok(())
    }
}

/// Whether the kernel drops terminal nodes that cannot vary with `X_P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    Pruned,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOutput {
    pub variance: f64,
    /// Number of `(k, l)` pairs with `k <= l` evaluated.
    pub terms: u64,
    pub surviving_nodes: usize,
}

/// One term `d_k 1{R_k^P}` of the conditional expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub tree: usize,
    pub d: f64,
    /// `R_k^P`, one interval per dimension of `P` in order.
    pub projection: Vec<Interval>,
}

/// Per-draw Sobol' summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolReport {
    pub p: usize,
    pub total_variance: f64,
    /// Set when the total variance is zero; normalized entries are then zero.
    pub degenerate: bool,
    pub first_order_v: Vec<f64>,
    pub first_order: Vec<f64>,
    /// Keyed by `(i, j)` with `i < j`.
    pub second_order_v: BTreeMap<(usize, usize), f64>,
    pub second_order: BTreeMap<(usize, usize), f64>,
    /// `Var(f) - Var(E[f | X_{-i}])`.
    pub total_effects_v: Vec<f64>,
    pub total_effects: Vec<f64>,
    /// `(V_P, S_P)` for every set of order three and above that was requested.
    pub higher_order: BTreeMap<IndexSet, (f64, f64)>,
}

impl SobolReport {
    /// Symmetric lookup of `S_ij`.
    pub fn s_ij(&self, i: usize, j: usize) -> Option<f64> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.second_order.get(&key).copied()
    }

    pub fn v_ij(&self, i: usize, j: usize) -> Option<f64> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.second_order_v.get(&key).copied()
    }

    /// Second-order indices flattened in lexicographic pair order.
    pub fn second_order_vec(&self) -> Vec<f64> {
        self.second_order.values().copied().collect()
    }
}

/// Prepared ensemble + measure with memoized closed variances and `V_P`.
///
/// Region data are stored flat: entry `k * p + j` is terminal node `k` on
/// dimension `j`, with interval endpoints already mapped through the marginal
/// CDFs so that every probability is a difference of two numbers.
pub struct SobolEngine<'a> {
    ens: &'a Ensemble,
    p: usize,
    mu: Vec<f64>,
    tree_of: Vec<usize>,
    splits: Vec<bool>,
    flo: Vec<f64>,
    fhi: Vec<f64>,
    bounds: Vec<Interval>,
    neg_tol: f64,
    closed: BTreeMap<IndexSet, f64>,
    v_cache: BTreeMap<IndexSet, f64>,
}

const NEG_TOL: f64 = 1e-12;
/// Decomposed terms within this fraction of the total variance are set to zero.
const SNAP_REL: f64 = 1e-12;

impl<'a> SobolEngine<'a> {
    pub fn new(ens: &'a Ensemble, measure: &ProductMeasure) -> Result<Self> {
        measure.check_domain(ens.domain())?;
        let p = ens.dim();
        let mut mu = Vec::new();
        let mut tree_of = Vec::new();
        let mut splits = Vec::new();
        let mut flo = Vec::new();
        let mut fhi = Vec::new();
        let mut bounds = Vec::new();
        let mut sup_norm = 0.0;
        for (t, regions) in ens.regions().into_iter().enumerate() {
            let mut tree_max: f64 = 0.0;
            for r in regions {
                tree_max = tree_max.max(r.mu.abs());
                mu.push(r.mu);
                tree_of.push(t);
                for j in 0..p {
                    splits.push(r.split_dims.contains(&j));
                    let m = measure.marginal(j);
                    flo.push(m.cdf(r.bounds[j].lo));
                    fhi.push(m.cdf(r.bounds[j].hi));
                    bounds.push(r.bounds[j]);
                }
            }
            sup_norm += tree_max;
        }
        Ok(SobolEngine {
            ens,
            p,
            mu,
            tree_of,
            splits,
            flo,
            fhi,
            bounds,
            neg_tol: NEG_TOL * (sup_norm * sup_norm).max(1.0),
            closed: BTreeMap::new(),
            v_cache: BTreeMap::new(),
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        self.ens
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn n_regions(&self) -> usize {
        self.mu.len()
    }

    fn check_set(&self, set: &IndexSet) -> Result<()> {
        match set.dims().last() {
            Some(&d) if d >= self.p => Err(Error::DimensionOutOfRange { dim: d, p: self.p }),
            _ => Ok(()),
        }
    }

    fn survives(&self, k: usize, set: &IndexSet, mode: KernelMode) -> bool {
        mode == KernelMode::Full || set.dims().iter().any(|&j| self.splits[k * self.p + j])
    }

    /// `(d_k, R_k^P)` for every terminal node left after pruning.
    pub fn cond_expect_coeffs(&self, set: &IndexSet) -> Result<Vec<Coefficient>> {
        self.check_set(set)?;
        let p = self.p;
        let mut out = Vec::new();
        for k in 0..self.mu.len() {
            if !self.survives(k, set, KernelMode::Pruned) {
                continue;
            }
            let mut d = self.mu[k];
            for j in (0..p).filter(|&j| !set.contains(j)) {
                d *= self.fhi[k * p + j] - self.flo[k * p + j];
            }
            out.push(Coefficient {
                tree: self.tree_of[k],
                d,
                projection: set.dims().iter().map(|&j| self.bounds[k * p + j]).collect(),
            });
        }
        Ok(out)
    }

    /// `Var(E[f(X) | X_P])` through the covariance kernel.
    pub fn kernel(&self, set: &IndexSet, mode: KernelMode) -> Result<KernelOutput> {
        self.check_set(set)?;
        let p = self.p;
        let dims = set.dims();
        let np = dims.len();
        if np == 0 {
            return Ok(KernelOutput {
                variance: 0.0,
                terms: 0,
                surviving_nodes: 0,
            });
        }
        let mut d = Vec::new();
        let mut q = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for k in 0..self.mu.len() {
            if !self.survives(k, set, mode) {
                continue;
            }
            let mut dk = self.mu[k];
            let mut qk = 1.0;
            for j in 0..p {
                let w = self.fhi[k * p + j] - self.flo[k * p + j];
                if set.contains(j) {
                    qk *= w;
                } else {
                    dk *= w;
                }
            }
            d.push(dk);
            q.push(qk);
            for &j in dims {
                lo.push(self.flo[k * p + j]);
                hi.push(self.fhi[k * p + j]);
            }
        }
        let s = d.len();
        let mut acc = 0.0;
        for k in 0..s {
            let (lk, hk) = (&lo[k * np..(k + 1) * np], &hi[k * np..(k + 1) * np]);
            acc += d[k] * d[k] * (q[k] - q[k] * q[k]);
            for l in (k + 1)..s {
                let (ll, hl) = (&lo[l * np..(l + 1) * np], &hi[l * np..(l + 1) * np]);
                let mut inter = 1.0;
                for a in 0..np {
                    let w = hk[a].min(hl[a]) - lk[a].max(ll[a]);
                    if w <= 0.0 {
                        inter = 0.0;
                        break;
                    }
                    inter *= w;
                }
                acc += 2.0 * d[k] * d[l] * (inter - q[k] * q[l]);
            }
        }
        let variance = if acc.abs() <= self.neg_tol {
            0.0
        } else if acc > 0.0 {
            acc
        } else {
            return Err(Error::NegativeVariance { value: acc });
        };
        Ok(KernelOutput {
            variance,
            terms: (s as u64) * (s as u64 + 1) / 2,
            surviving_nodes: s,
        })
    }

    /// Memoized `Var(E[f(X) | X_P])`; zero for the empty set.
    pub fn var_cond_expect(&mut self, set: &IndexSet) -> Result<f64> {
        if let Some(&v) = self.closed.get(set) {
            return Ok(v);
        }
        let v = self.kernel(set, KernelMode::Pruned)?.variance;
        self.closed.insert(set.clone(), v);
        Ok(v)
    }

    pub fn total_variance(&mut self) -> Result<f64> {
        self.var_cond_expect(&IndexSet::full(self.p))
    }

    /// Unnormalized `V_P` by recursion over nonempty proper subsets.
    pub fn sobol_v(&mut self, set: &IndexSet) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        if let Some(&v) = self.v_cache.get(set) {
            return Ok(v);
        }
        let mut v = self.var_cond_expect(set)?;
        for sub in set.proper_subsets() {
            v -= self.sobol_v(&sub)?;
        }
        // cancellation leftovers of a structural zero
        if v.abs() <= SNAP_REL * self.total_variance()? {
            v = 0.0;
        }
        self.v_cache.insert(set.clone(), v);
        Ok(v)
    }

    /// `S_P = V_P / Var(f)`, or zero for a constant ensemble.
    pub fn sobol_s(&mut self, set: &IndexSet) -> Result<f64> {
        let v = self.sobol_v(set)?;
        let total = self.total_variance()?;
        Ok(if total > 0.0 { v / total } else { 0.0 })
    }

    /// Unnormalized total effect `Var(f) - Var(E[f | X_{-i}])`.
    pub fn total_effect_v(&mut self, i: usize) -> Result<f64> {
        if i >= self.p {
            return Err(Error::DimensionOutOfRange { dim: i, p: self.p });
        }
        let total = self.total_variance()?;
        let t = total - self.var_cond_expect(&IndexSet::without(i, self.p))?;
        Ok(if t.abs() <= SNAP_REL * total { 0.0 } else { t })
    }

    /// `T_i = 1 - Var(E[f | X_{-i}]) / Var(f)`, or zero for a constant ensemble.
    pub fn total_effect(&mut self, i: usize) -> Result<f64> {
        let total = self.total_variance()?;
        if total > 0.0 {
            Ok(1.0 - self.var_cond_expect(&IndexSet::without(i, self.p))? / total)
        } else {
            self.total_effect_v(i)?;
            Ok(0.0)
        }
    }

    /// First- and second-order indices, total effects, and every order up to
    /// `max_order` (at least 2 is always computed when `p >= 2`).
    pub fn report(&mut self, max_order: usize) -> Result<SobolReport> {
        let p = self.p;
        let total = self.total_variance()?;
        let degenerate = total <= 0.0;
        let norm = |v: f64| if degenerate { 0.0 } else { v / total };
        let mut first_order_v = Vec::with_capacity(p);
        for i in 0..p {
            first_order_v.push(self.sobol_v(&IndexSet::single(i, p)?)?);
        }
        let mut second_order_v = BTreeMap::new();
        for i in 0..p {
            for j in (i + 1)..p {
                second_order_v.insert((i, j), self.sobol_v(&IndexSet::pair(i, j, p)?)?);
            }
        }
        let mut total_effects_v = Vec::with_capacity(p);
        let mut total_effects = Vec::with_capacity(p);
        for i in 0..p {
            total_effects_v.push(self.total_effect_v(i)?);
            total_effects.push(self.total_effect(i)?);
        }
        let mut higher_order = BTreeMap::new();
        for k in 3..=max_order.min(p) {
            for set in IndexSet::all_of_size(p, k) {
                let v = self.sobol_v(&set)?;
                higher_order.insert(set, (v, norm(v)));
            }
        }
        Ok(SobolReport {
            p,
            total_variance: total,
            degenerate,
            first_order: first_order_v.iter().map(|&v| norm(v)).collect(),
            second_order: second_order_v.iter().map(|(&k, &v)| (k, norm(v))).collect(),
            first_order_v,
            second_order_v,
            total_effects_v,
            total_effects,
            higher_order,
        })
    }
}

/// Report with first/second order and total effects for one ensemble.
pub fn report(ens: &Ensemble, measure: &ProductMeasure) -> Result<SobolReport> {
    SobolEngine::new(ens, measure)?.report(2)
}

type PairMap = BTreeMap<(usize, usize), f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorReport {
    /// Arithmetic mean of the per-draw normalized indices (non-degenerate draws).
    pub mean: SobolReport,
    pub draws: Vec<SobolReport>,
    /// Draws with zero total variance; excluded from `mean`.
    pub n_degenerate: usize,
}

/// Per-draw reports and their posterior mean. Each draw is normalized by its
/// own total variance before averaging.
pub fn aggregate(posterior: &[Ensemble], measure: &ProductMeasure) -> Result<PosteriorReport> {
    aggregate_with(posterior, measure, 2)
}

pub fn aggregate_with(
    posterior: &[Ensemble],
    measure: &ProductMeasure,
    max_order: usize,
) -> Result<PosteriorReport> {
    let draws = posterior
        .iter()
        .map(|e| SobolEngine::new(e, measure)?.report(max_order))
        .collect::<Result<Vec<_>>>()?;
    aggregate_reports(draws)
}

/// Posterior mean over already computed per-draw reports.
pub fn aggregate_reports(draws: Vec<SobolReport>) -> Result<PosteriorReport> {
    let first = draws.first().ok_or(Error::EmptyPosterior)?;
    let p = first.p;
    for r in &draws {
        if r.p != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: r.p,
            });
        }
    }
    let used: Vec<&SobolReport> = draws.iter().filter(|r| !r.degenerate).collect();
    let n_degenerate = draws.len() - used.len();
    let n = used.len().max(1) as f64;
    let mean_vec = |f: &dyn Fn(&SobolReport) -> &Vec<f64>| -> Vec<f64> {
        let mut acc = vec![0.0; p];
        for r in &used {
            for (a, v) in acc.iter_mut().zip(f(r)) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / n).collect()
    };
    let mean_map = |f: &dyn Fn(&SobolReport) -> &PairMap| {
        let mut acc: BTreeMap<(usize, usize), f64> = f(first).keys().map(|&k| (k, 0.0)).collect();
        for r in &used {
            for (k, v) in f(r) {
                *acc.entry(*k).or_insert(0.0) += v;
            }
        }
        acc.values_mut().for_each(|v| *v /= n);
        acc
    };
    let mut higher: BTreeMap<IndexSet, (f64, f64)> = first
        .higher_order
        .keys()
        .map(|k| (k.clone(), (0.0, 0.0)))
        .collect();
    for r in &used {
        for (k, (v, s)) in &r.higher_order {
            let e = higher.entry(k.clone()).or_insert((0.0, 0.0));
            e.0 += v;
            e.1 += s;
        }
    }
    higher.values_mut().for_each(|e| {
        e.0 /= n;
        e.1 /= n;
    });
    let mean = SobolReport {
        p,
        total_variance: used.iter().map(|r| r.total_variance).sum::<f64>() / n,
        degenerate: used.is_empty(),
        first_order_v: mean_vec(&|r| &r.first_order_v),
        first_order: mean_vec(&|r| &r.first_order),
        second_order_v: mean_map(&|r| &r.second_order_v),
        second_order: mean_map(&|r| &r.second_order),
        total_effects_v: mean_vec(&|r| &r.total_effects_v),
        total_effects: mean_vec(&|r| &r.total_effects),
        higher_order: higher,
    };
    Ok(PosteriorReport {
        mean,
        draws,
        n_degenerate,
    })
}
