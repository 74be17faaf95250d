//! Simulation study: synthetic data from a benchmark function, a posterior
//! fit, and accuracy metrics of the per-draw indices against the truth.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use treesobol_core::{
    competition_rank, d_r, one_way_counts, unique_rule_counts, ProductMeasure, Ranking,
    SobolEngine, TestFunction,
};

use crate::error::{Error, Result};
use crate::lhd::{maximin_lhd, DEFAULT_RESTARTS};
use crate::sampler::{fit_with, Dataset, SamplerConfig};

/// Ties in the true indices are detected with this tolerance.
pub const TRUTH_TIE_TOL: f64 = 1e-12;

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Benchmark name as accepted by [`TestFunction::from_name`].
    pub function: String,
    /// Number of inputs is `p_ratio * p0`; the extra ones are inert.
    pub p_ratio: usize,
    /// Sample size is `n_per_dim * p`.
    pub n_per_dim: usize,
    /// Noise variance as a fraction of `Var(f)`.
    pub noise_ratio: f64,
    pub replicates: usize,
    pub draws: usize,
    pub burn: usize,
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub lhd_restarts: usize,
    /// Worker threads for replicates; 0 picks the machine's parallelism.
    #[serde(default)]
    pub threads: usize,
    /// Prior and tree settings. Its draw counts and seed are ignored.
    #[serde(default)]
    pub sampler: SamplerConfig,
}

impl Scenario {
    /// Friedman, `p = 5`, `n = 250`, noise at 10% of the signal variance.
    pub fn friedman_default() -> Self {
        Scenario {
            function: "friedman".into(),
            p_ratio: 1,
            n_per_dim: 50,
            noise_ratio: 0.10,
            replicates: 10,
            draws: 1000,
            burn: 1000,
            seed: 1,
            lhd_restarts: DEFAULT_RESTARTS,
            threads: 0,
            sampler: SamplerConfig::default(),
        }
    }

    /// Setting of the count-inflation demo: three inputs, 300 points, low noise.
    pub fn demo() -> Self {
        Scenario {
            function: "count-demo".into(),
            n_per_dim: 100,
            noise_ratio: 0.05,
            replicates: 1,
            ..Self::friedman_default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.test_function()?;
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.p_ratio == 0 || self.n_per_dim == 0 {
            return bad("p_ratio and n_per_dim must be positive");
        }
        if !(self.noise_ratio >= 0.0 && self.noise_ratio.is_finite()) {
            return bad("noise_ratio must be a nonnegative number");
        }
        if self.replicates == 0 || self.draws == 0 {
            return bad("replicates and draws must be positive");
        }
        self.sampler.validate()
    }

    pub fn test_function(&self) -> Result<TestFunction> {
        Ok(TestFunction::from_name(&self.function)?)
    }

    pub fn p(&self) -> Result<usize> {
        Ok(self.test_function()?.p0() * self.p_ratio)
    }

    pub fn n(&self) -> Result<usize> {
        Ok(self.n_per_dim * self.p()?)
    }

    /// Label like `friedman-p5-n250-0.1`.
    pub fn id(&self) -> String {
        let p = self.p().unwrap_or(0);
        format!(
            "{}-p{}-n{}-{}",
            self.function,
            p,
            self.n_per_dim * p,
            self.noise_ratio
        )
    }

    fn sampler_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_draws: self.draws,
            n_burn: self.burn,
            seed,
            prior_only: false,
            ..self.sampler.clone()
        }
    }
}

/// Inputs on a maximin LHD, responses `f(x) + N(0, noise_ratio * Var(f))`.
pub fn make_dataset(f: TestFunction, s: &Scenario, seed: u64) -> Result<Dataset> {
    let p = f.p0() * s.p_ratio;
    let n = s.n_per_dim * p;
    let x = maximin_lhd(n, p, seed, s.lhd_restarts)?;
    let sd = (s.noise_ratio * f.exact_indices().variance).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let y = x
        .iter()
        .map(|row| {
            let e: f64 = StandardNormal.sample(&mut rng);
            f.eval_unchecked(row) + if sd > 0.0 { sd * e } else { 0.0 }
        })
        .collect();
    Dataset::new(x, y)
}

/// Mean over draws of `sum_i |est_i - truth_i|`.
pub fn l1_metric(per_draw: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if per_draw.is_empty() {
        return Err(Error::Data("no draws".into()));
    }
    let mut total = 0.0;
    for d in per_draw {
        if d.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!(
                "draw has {} indices, truth has {}",
                d.len(),
                truth.len()
            )));
        }
        total += l1(d, truth);
    }
    Ok(total / per_draw.len() as f64)
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub const METRIC_NAMES: [&str; 8] = [
    "l1_s",
    "l1_sij",
    "l1_t",
    "dr_s",
    "dr_count_s",
    "dr_t",
    "dr_count_t",
    "dr_sij",
];

/// Per-replicate averages over draws, in [`METRIC_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateMetrics {
    pub values: [f64; 8],
    /// Largest per-draw value of each rank discrepancy (the `dr_*` metrics).
    pub max_dr: [usize; 5],
    pub n_degenerate: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub scenario: String,
    pub metrics: [Stat; 8],
}

impl MetricRow {
    pub fn get(&self, name: &str) -> Option<Stat> {
        METRIC_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|k| self.metrics[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub row: MetricRow,
    pub replicates: Vec<ReplicateMetrics>,
    /// Truth-side maxima of the five rank discrepancies.
    pub max_possible: [usize; 5],
}

struct Truth {
    s: Vec<f64>,
    t: Vec<f64>,
    sij: Vec<f64>,
    rank_s: Ranking,
    rank_t: Ranking,
    rank_sij: Ranking,
}

impl Truth {
    fn new(f: TestFunction, p: usize) -> Result<Self> {
        let tr = f.true_report(p)?;
        let sij = tr.second_order_vec();
        Ok(Truth {
            rank_s: competition_rank(&tr.first_order, TRUTH_TIE_TOL)?,
            rank_t: competition_rank(&tr.total_effects, TRUTH_TIE_TOL)?,
            rank_sij: competition_rank(&sij, TRUTH_TIE_TOL)?,
            s: tr.first_order,
            t: tr.total_effects,
            sij,
        })
    }

    fn max_possible(&self) -> [usize; 5] {
        let (s, t) = (self.rank_s.max_discrepancy(), self.rank_t.max_discrepancy());
        [s, s, t, t, self.rank_sij.max_discrepancy()]
    }
}

/// Fits one replicate and averages the metrics over its draws.
pub fn run_replicate(s: &Scenario, data_seed: u64, chain_seed: u64) -> Result<ReplicateMetrics> {
    let f = s.test_function()?;
    let truth = Truth::new(f, s.p()?)?;
    let data = make_dataset(f, s, data_seed)?;
    replicate_metrics(&data, &s.sampler_config(chain_seed), &truth)
}

fn replicate_metrics(
    data: &Dataset,
    cfg: &SamplerConfig,
    truth: &Truth,
) -> Result<ReplicateMetrics> {
    let mut sums = [0.0; 8];
    let mut max_dr = [0; 5];
    let mut used = 0usize;
    let mut n_degenerate = 0;
    fit_with(data, cfg, |_, ens, _| {
        let measure = ProductMeasure::uniform(ens.domain());
        let rep = SobolEngine::new(ens, &measure)?.report(2)?;
        if rep.degenerate {
            n_degenerate += 1;
            return Ok(());
        }
        let sij = rep.second_order_vec();
        let counts: Vec<f64> = one_way_counts(ens).iter().map(|&c| c as f64).collect();
        let rank_s = competition_rank(&rep.first_order, 0.0)?;
        let rank_t = competition_rank(&rep.total_effects, 0.0)?;
        let rank_c = competition_rank(&counts, 0.0)?;
        let rank_sij = competition_rank(&sij, 0.0)?;
        let drs = [
            d_r(&truth.rank_s, &rank_s)?,
            d_r(&truth.rank_s, &rank_c)?,
            d_r(&truth.rank_t, &rank_t)?,
            d_r(&truth.rank_t, &rank_c)?,
            d_r(&truth.rank_sij, &rank_sij)?,
        ];
        let vals = [
            l1(&rep.first_order, &truth.s),
            l1(&sij, &truth.sij),
            l1(&rep.total_effects, &truth.t),
            drs[0] as f64,
            drs[1] as f64,
            drs[2] as f64,
            drs[3] as f64,
            drs[4] as f64,
        ];
        for k in 0..8 {
            sums[k] += vals[k];
        }
        for k in 0..5 {
            max_dr[k] = max_dr[k].max(drs[k]);
        }
        used += 1;
        Ok(())
    })?;
    if used == 0 {
        return Err(treesobol_core::Error::EmptyPosterior.into());
    }
    Ok(ReplicateMetrics {
        values: sums.map(|v| v / used as f64),
        max_dr,
        n_degenerate,
    })
}

/// `(data seed, chain seed)` for every replicate, drawn from the master seed.
pub fn replicate_seeds(master: u64, replicates: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..replicates)
        .map(|_| (rng.next_u64(), rng.next_u64()))
        .collect()
}

/// Runs all replicates, spread over worker threads. Results do not depend on
/// the thread count.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult> {
    s.validate()?;
    let f = s.test_function()?;
    let truth = Truth::new(f, s.p()?)?;
    let seeds = replicate_seeds(s.seed, s.replicates);
    let threads = match s.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .min(s.replicates);
    let mut slots: Vec<Option<Result<ReplicateMetrics>>> =
        (0..s.replicates).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = slots
            .chunks_mut(s.replicates.div_ceil(threads))
            .enumerate()
            .collect();
        let per = s.replicates.div_ceil(threads);
        for (c, chunk) in chunks {
            let (seeds, truth) = (&seeds, &truth);
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let (ds, cs) = seeds[c * per + k];
                    *slot =
                        Some(make_dataset(f, s, ds).and_then(|data| {
                            replicate_metrics(&data, &s.sampler_config(cs), truth)
                        }));
                }
            });
        }
    });
    let replicates = slots
        .into_iter()
        .map(|r| r.expect("every replicate ran"))
        .collect::<Result<Vec<_>>>()?;
    let metrics = std::array::from_fn(|k| {
        Stat::of(&replicates.iter().map(|r| r.values[k]).collect::<Vec<_>>())
    });
    Ok(ScenarioResult {
        row: MetricRow {
            scenario: s.id(),
            metrics,
        },
        max_possible: truth.max_possible(),
        replicates,
    })
}

pub fn write_metric_rows<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scenario".to_string()];
    for n in METRIC_NAMES {
        header.push(format!("{n}_mean"));
        header.push(format!("{n}_sd"));
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.scenario.clone()];
        for m in &r.metrics {
            rec.push(m.mean.to_string());
            rec.push(m.sd.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoDraw {
    pub counts: Vec<usize>,
    pub unique_counts: Vec<usize>,
    pub first_order: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoResult {
    pub draws: Vec<DemoDraw>,
    pub mean_counts: Vec<f64>,
    pub mean_first_order: Vec<f64>,
}

/// Per-draw split counts next to first-order indices for one fit of the
/// scenario (normally [`Scenario::demo`]).
pub fn run_demo_counts(s: &Scenario) -> Result<DemoResult> {
    s.validate()?;
    let f = s.test_function()?;
    let (ds, cs) = replicate_seeds(s.seed, 1)[0];
    let data = make_dataset(f, s, ds)?;
    let mut draws = Vec::with_capacity(s.draws);
    fit_with(&data, &s.sampler_config(cs), |_, ens, _| {
        let measure = ProductMeasure::uniform(ens.domain());
        let rep = SobolEngine::new(ens, &measure)?.report(1)?;
        draws.push(DemoDraw {
            counts: one_way_counts(ens),
            unique_counts: unique_rule_counts(ens),
            first_order: rep.first_order,
        });
        Ok(())
    })?;
    let p = data.p();
    let n = draws.len() as f64;
    let mean_counts = (0..p)
        .map(|i| draws.iter().map(|d| d.counts[i] as f64).sum::<f64>() / n)
        .collect();
    let mean_first_order = (0..p)
        .map(|i| draws.iter().map(|d| d.first_order[i]).sum::<f64>() / n)
        .collect();
    Ok(DemoResult {
        draws,
        mean_counts,
        mean_first_order,
    })
}

/// Columns `draw, dim, count, unique_count, S`, dimensions 1-based.
pub fn write_counts_csv<W: Write>(demo: &DemoResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["draw", "dim", "count", "unique_count", "S"])?;
    for (d, row) in demo.draws.iter().enumerate() {
        for i in 0..row.counts.len() {
            w.write_record([
                d.to_string(),
                (i + 1).to_string(),
                row.counts[i].to_string(),
                row.unique_counts[i].to_string(),
                row.first_order[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
