//! A small Bayesian sum-of-trees sampler.
//!
//! Each sweep updates every tree against the partial residuals of the others:
//! one birth or death proposal accepted by Metropolis-Hastings on the
//! leaf-integrated likelihood, then conjugate normal draws of its leaf values.
//! The noise variance gets a scaled inverse chi-square draw after each sweep.
//!
//! Responses are centred and divided by their range internally; exported
//! ensembles are mapped back to the original scale.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared as ChiSquaredDist, ContinuousCDF};
use treesobol_core::{Domain, Ensemble, Node, Tree};

use crate::error::{Error, Result};

/// Observations with inputs in `[0, 1]^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Data("rows have different lengths".into()));
        }
        Self::from_flat(rows.concat(), p, y)
    }

    /// `x` is row-major with `p` columns.
    pub fn from_flat(x: Vec<f64>, p: usize, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::Data(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if p == 0 || x.len() != n * p {
            return Err(Error::Data(
                "design matrix shape does not match responses".into(),
            ));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite response {v}")));
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Data(format!("input {v} outside [0, 1]")));
        }
        Ok(Dataset { p, x, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn is_constant(&self) -> bool {
        self.y.iter().all(|&v| v == self.y[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Number of trees.
    pub m: usize,
    pub n_draws: usize,
    pub n_burn: usize,
    /// Keep every `thin`-th sweep after burn-in.
    pub thin: usize,
    /// Split probability at depth `d` is `alpha (1 + d)^-beta`.
    pub alpha: f64,
    pub beta: f64,
    /// Leaf prior sd is `range(y) / (2 k sqrt(m))`.
    pub k: f64,
    pub nu: f64,
    /// Prior probability that sigma is below the rough data estimate.
    pub q: f64,
    /// Interior cutpoints per input.
    pub grid: usize,
    /// Births leaving fewer observations in a child are rejected.
    pub min_leaf_size: usize,
    pub seed: u64,
    /// Ignore the data and sample from the prior.
    pub prior_only: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            m: 200,
            n_draws: 1000,
            n_burn: 1000,
            thin: 1,
            alpha: 0.95,
            beta: 2.0,
            k: 2.0,
            nu: 3.0,
            q: 0.9,
            grid: 100,
            min_leaf_size: 5,
            seed: 0,
            prior_only: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return bad("beta must be nonnegative");
        }
        if !(self.k > 0.0 && self.nu > 0.0) {
            return bad("k and nu must be positive");
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad("q must lie in (0, 1)");
        }
        if self.grid < 2 {
            return bad("grid must have at least 2 points");
        }
        if self.thin == 0 {
            return bad("thin must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub ensemble: Ensemble,
    pub sigma: f64,
}

/// Log marginal likelihood of one leaf holding `n` residuals with sum `s` and
/// sum of squares `ss`, its mean integrated against `N(0, tau2)`.
pub fn leaf_log_marginal(n: usize, s: f64, ss: f64, sigma2: f64, tau2: f64) -> f64 {
    let nf = n as f64;
    let denom = sigma2 + nf * tau2;
    -0.5 * nf * (2.0 * std::f64::consts::PI * sigma2).ln() + 0.5 * (sigma2 / denom).ln()
        - ss / (2.0 * sigma2)
        + tau2 * s * s / (2.0 * sigma2 * denom)
}

/// Sum of [`leaf_log_marginal`] over the leaves of `tree` for the given
/// residuals. Fails when a leaf receives no observation.
pub fn log_marginal_likelihood(
    tree: &Tree,
    data: &Dataset,
    residuals: &[f64],
    sigma: f64,
    tau: f64,
) -> Result<f64> {
    if residuals.len() != data.n() {
        return Err(Error::Data("one residual per observation required".into()));
    }
    let n_leaves = tree.n_leaves();
    let mut stats = vec![(0usize, 0.0, 0.0); n_leaves];
    for (i, &r) in residuals.iter().enumerate() {
        let leaf = leaf_index(tree.root(), data.row(i));
        let s = &mut stats[leaf];
        s.0 += 1;
        s.1 += r;
        s.2 += r * r;
    }
    if stats.iter().any(|s| s.0 == 0) {
        return Err(Error::Data("tree has a leaf without observations".into()));
    }
    Ok(stats
        .iter()
        .map(|&(n, s, ss)| leaf_log_marginal(n, s, ss, sigma * sigma, tau * tau))
        .sum())
}

/// Position of the leaf reached by `x`, counting leaves left to right.
fn leaf_index(node: &Node, x: &[f64]) -> usize {
    fn count(node: &Node) -> usize {
        match node {
            Node::Leaf(_) => 1,
            Node::Split { left, right, .. } => count(left) + count(right),
        }
    }
    match node {
        Node::Leaf(_) => 0,
        Node::Split { rule, left, right } => {
            if rule.goes_left(x) {
                leaf_index(left, x)
            } else {
                count(left) + leaf_index(right, x)
            }
        }
    }
}

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct SNode {
    parent: usize,
    left: usize,
    right: usize,
    dim: usize,
    /// Cut index `c` in `1..=grid`; the cut value is `c / (grid + 1)`.
    cut: u32,
    depth: usize,
    leaf: bool,
    mu: f64,
    members: Vec<u32>,
}

#[derive(Debug, Clone)]
struct STree {
    nodes: Vec<SNode>,
    free: Vec<usize>,
}

impl STree {
    fn stump(n: usize) -> Self {
        STree {
            nodes: vec![SNode {
                parent: NONE,
                left: NONE,
                right: NONE,
                dim: 0,
                cut: 0,
                depth: 0,
                leaf: true,
                mu: 0.0,
                members: (0..n as u32).collect(),
            }],
            free: Vec::new(),
        }
    }

    fn alloc(&mut self, node: SNode) -> usize {
        if let Some(id) = self.free.pop() {
            self.nodes[id] = node;
            id
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        }
    }

    fn live(&self) -> impl Iterator<Item = usize> + '_ {
        let mut stack = vec![0];
        std::iter::from_fn(move || {
            let id = stack.pop()?;
            let n = &self.nodes[id];
            if !n.leaf {
                stack.push(n.right);
                stack.push(n.left);
            }
            Some(id)
        })
    }

    fn leaves(&self) -> Vec<usize> {
        self.live().filter(|&i| self.nodes[i].leaf).collect()
    }

    /// Internal nodes whose children are both leaves.
    fn nogs(&self) -> Vec<usize> {
        self.live()
            .filter(|&i| {
                let n = &self.nodes[i];
                !n.leaf && self.nodes[n.left].leaf && self.nodes[n.right].leaf
            })
            .collect()
    }

    /// Open cut-index interval `(lo, hi)` of the node's box on every input.
    fn bounds(&self, id: usize, p: usize, grid: u32) -> (Vec<u32>, Vec<u32>) {
        let mut lo = vec![0; p];
        let mut hi = vec![grid + 1; p];
        let mut child = id;
        let mut cur = self.nodes[id].parent;
        while cur != NONE {
            let n = &self.nodes[cur];
            if n.left == child {
                hi[n.dim] = hi[n.dim].min(n.cut);
            } else {
                lo[n.dim] = lo[n.dim].max(n.cut);
            }
            child = cur;
            cur = n.parent;
        }
        (lo, hi)
    }

    fn is_stump(&self) -> bool {
        self.nodes[0].leaf
    }

    fn to_node(&self, id: usize, grid: u32, scale: f64, shift: f64) -> Node {
        let n = &self.nodes[id];
        if n.leaf {
            Node::leaf(n.mu * scale + shift)
        } else {
            Node::split(
                n.dim,
                cut_value(n.cut, grid),
                self.to_node(n.left, grid, scale, shift),
                self.to_node(n.right, grid, scale, shift),
            )
        }
    }
}

fn cut_value(c: u32, grid: u32) -> f64 {
    c as f64 / (grid + 1) as f64
}

fn available(lo: &[u32], hi: &[u32]) -> usize {
    lo.iter().zip(hi).filter(|(l, h)| **h > **l + 1).count()
}

/// Residual sufficient statistics `(n, sum, sum of squares)` over `members`.
fn stats(members: &[u32], r: &[f64]) -> (usize, f64, f64) {
    let mut s = 0.0;
    let mut ss = 0.0;
    for &i in members {
        let v = r[i as usize];
        s += v;
        ss += v * v;
    }
    (members.len(), s, ss)
}

/// Rough noise level of standardized responses: OLS residual SD, or the plain
/// SD when there are too few observations for a linear fit.
fn sigma_hat(data: &Dataset, ys: &[f64]) -> f64 {
    let (n, p) = (data.n(), data.p());
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    if n <= p + 1 {
        return sd(ys);
    }
    let a = DMatrix::from_fn(
        n,
        p + 1,
        |i, j| if j == 0 { 1.0 } else { data.row(i)[j - 1] },
    );
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    match svd.solve(&b, 1e-12) {
        Ok(coef) => {
            let resid = b - a * coef;
            (resid.norm_squared() / (n - p - 1) as f64).sqrt()
        }
        Err(_) => sd(ys),
    }
}

/// Sampler state. Use [`fit`] or [`fit_with`] unless you need to drive the
/// chain sweep by sweep.
pub struct Sampler<'a> {
    data: &'a Dataset,
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
    trees: Vec<STree>,
    tree_pred: Vec<Vec<f64>>,
    fit: Vec<f64>,
    ys: Vec<f64>,
    resid: Vec<f64>,
    sigma2: f64,
    lambda: f64,
    tau2: f64,
    ybar: f64,
    range: f64,
    proposed: u64,
    accepted: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(data: &'a Dataset, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        let n = data.n();
        let ybar = data.y.iter().sum::<f64>() / n as f64;
        let (mn, mx) = data
            .y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let range = if mx > mn { mx - mn } else { 1.0 };
        let ys: Vec<f64> = data.y.iter().map(|v| (v - ybar) / range).collect();
        let s_hat = sigma_hat(data, &ys).max(1e-6);
        let chi = ChiSquaredDist::new(cfg.nu).map_err(|e| Error::Config(e.to_string()))?;
        let lambda = s_hat * s_hat * chi.inverse_cdf(1.0 - cfg.q) / cfg.nu;
        let tau = 0.5 / (cfg.k * (cfg.m as f64).sqrt());
        Ok(Sampler {
            data,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            trees: (0..cfg.m).map(|_| STree::stump(n)).collect(),
            tree_pred: vec![vec![0.0; n]; cfg.m],
            fit: vec![0.0; n],
            resid: vec![0.0; n],
            ys,
            sigma2: s_hat * s_hat,
            lambda,
            tau2: tau * tau,
            ybar,
            range,
            proposed: 0,
            accepted: 0,
            cfg,
        })
    }

    /// Noise standard deviation on the response scale.
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt() * self.range
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Current state as an ensemble on `[0, 1]^p` in response units.
    pub fn ensemble(&self) -> Ensemble {
        let grid = self.cfg.grid as u32;
        let shift = self.ybar / self.cfg.m as f64;
        let trees = self
            .trees
            .iter()
            .map(|t| Tree::new(t.to_node(0, grid, self.range, shift)))
            .collect();
        Ensemble::new(Domain::unit(self.data.p()), trees).expect("sampler trees are valid")
    }

    /// One full sweep over all trees followed by the noise update.
    pub fn step(&mut self) {
        let n = self.data.n();
        for t in 0..self.cfg.m {
            for i in 0..n {
                self.resid[i] = self.ys[i] - self.fit[i] + self.tree_pred[t][i];
            }
            self.propose(t);
            self.draw_leaves(t);
            let tree = &self.trees[t];
            for id in tree.leaves() {
                let node = &tree.nodes[id];
                for &i in &node.members {
                    let i = i as usize;
                    self.fit[i] += node.mu - self.tree_pred[t][i];
                    self.tree_pred[t][i] = node.mu;
                }
            }
        }
        self.draw_sigma();
    }

    fn psplit(&self, depth: usize, avail: bool) -> f64 {
        if avail {
            self.cfg.alpha * (1.0 + depth as f64).powf(-self.cfg.beta)
        } else {
            0.0
        }
    }

    fn leaf_lml(&self, st: (usize, f64, f64)) -> f64 {
        if self.cfg.prior_only {
            0.0
        } else {
            leaf_log_marginal(st.0, st.1, st.2, self.sigma2, self.tau2)
        }
    }

    fn propose(&mut self, t: usize) {
        let p = self.data.p();
        let grid = self.cfg.grid as u32;
        let tree = &self.trees[t];
        let leaves = tree.leaves();
        let splittable: Vec<usize> = leaves
            .iter()
            .copied()
            .filter(|&l| {
                let (lo, hi) = tree.bounds(l, p, grid);
                available(&lo, &hi) > 0
            })
            .collect();
        let nogs = tree.nogs();
        let b = splittable.len();
        let pb = if b == 0 {
            0.0
        } else if tree.is_stump() {
            1.0
        } else {
            0.5
        };
        if b == 0 && nogs.is_empty() {
            return;
        }
        self.proposed += 1;
        let accept = if self.rng.random::<f64>() < pb {
            self.birth(t, &splittable, nogs.len(), pb)
        } else {
            self.death(t, &nogs, b, 1.0 - pb)
        };
        if accept {
            self.accepted += 1;
        }
    }

    fn birth(&mut self, t: usize, splittable: &[usize], w: usize, pb: f64) -> bool {
        let p = self.data.p();
        let grid = self.cfg.grid as u32;
        let eta = splittable[self.rng.random_range(0..splittable.len())];
        let tree = &self.trees[t];
        let (lo, hi) = tree.bounds(eta, p, grid);
        let dims: Vec<usize> = (0..p).filter(|&d| hi[d] > lo[d] + 1).collect();
        let dim = dims[self.rng.random_range(0..dims.len())];
        let cut = self.rng.random_range(lo[dim] + 1..hi[dim]);
        let cv = cut_value(cut, grid);
        let node = &tree.nodes[eta];
        let (left, right): (Vec<u32>, Vec<u32>) = node
            .members
            .iter()
            .partition(|&&i| self.data.row(i as usize)[dim] < cv);
        if !self.cfg.prior_only && left.len().min(right.len()) < self.cfg.min_leaf_size.max(1) {
            return false;
        }
        let others = dims.len() > 1;
        let l_avail = others || cut > lo[dim] + 1;
        let r_avail = others || hi[dim] > cut + 1;
        let depth = node.depth;
        let sibling_leaf = node.parent != NONE && {
            let par = &tree.nodes[node.parent];
            let sib = if par.left == eta { par.right } else { par.left };
            tree.nodes[sib].leaf
        };
        let w_new = w + 1 - usize::from(sibling_leaf);
        let b_new = splittable.len() - 1 + usize::from(l_avail) + usize::from(r_avail);
        let pd_new = if b_new > 0 { 0.5 } else { 1.0 };
        let ps = self.psplit(depth, true);
        let lik = self.leaf_lml(stats(&left, &self.resid))
            + self.leaf_lml(stats(&right, &self.resid))
            - self.leaf_lml(stats(&node.members, &self.resid));
        let log_ratio = (pd_new / w_new as f64).ln() - (pb / splittable.len() as f64).ln()
            + ps.ln()
            + (1.0 - self.psplit(depth + 1, l_avail)).ln()
            + (1.0 - self.psplit(depth + 1, r_avail)).ln()
            - (1.0 - ps).ln()
            + lik;
        if self.rng.random::<f64>().ln() >= log_ratio {
            return false;
        }
        let tree = &mut self.trees[t];
        let child = |members: Vec<u32>| SNode {
            parent: eta,
            left: NONE,
            right: NONE,
            dim: 0,
            cut: 0,
            depth: depth + 1,
            leaf: true,
            mu: 0.0,
            members,
        };
        let l = tree.alloc(child(left));
        let r = tree.alloc(child(right));
        let node = &mut tree.nodes[eta];
        node.leaf = false;
        node.dim = dim;
        node.cut = cut;
        node.left = l;
        node.right = r;
        node.members = Vec::new();
        true
    }

    fn death(&mut self, t: usize, nogs: &[usize], b: usize, pd: f64) -> bool {
        let p = self.data.p();
        let grid = self.cfg.grid as u32;
        let eta = nogs[self.rng.random_range(0..nogs.len())];
        let tree = &self.trees[t];
        let node = &tree.nodes[eta];
        let (l, r) = (node.left, node.right);
        let avail = |id: usize| {
            let (lo, hi) = tree.bounds(id, p, grid);
            available(&lo, &hi) > 0
        };
        let (l_avail, r_avail) = (avail(l), avail(r));
        let b_new = b - usize::from(l_avail) - usize::from(r_avail) + 1;
        let pb_new = if eta == 0 { 1.0 } else { 0.5 };
        let depth = node.depth;
        let ps = self.psplit(depth, true);
        let (lm, rm) = (&tree.nodes[l].members, &tree.nodes[r].members);
        let merged: Vec<u32> = lm.iter().chain(rm).copied().collect();
        let lik = self.leaf_lml(stats(&merged, &self.resid))
            - self.leaf_lml(stats(lm, &self.resid))
            - self.leaf_lml(stats(rm, &self.resid));
        let log_ratio = (pb_new / b_new as f64).ln() - (pd / nogs.len() as f64).ln()
            + (1.0 - ps).ln()
            - ps.ln()
            - (1.0 - self.psplit(depth + 1, l_avail)).ln()
            - (1.0 - self.psplit(depth + 1, r_avail)).ln()
            + lik;
        if self.rng.random::<f64>().ln() >= log_ratio {
            return false;
        }
        let tree = &mut self.trees[t];
        tree.free.push(l);
        tree.free.push(r);
        tree.nodes[l].members = Vec::new();
        tree.nodes[r].members = Vec::new();
        let node = &mut tree.nodes[eta];
        node.leaf = true;
        node.left = NONE;
        node.right = NONE;
        node.members = merged;
        true
    }

    fn draw_leaves(&mut self, t: usize) {
        for id in self.trees[t].leaves() {
            let z: f64 = self.rng.sample(StandardNormal);
            let mu = if self.cfg.prior_only {
                self.tau2.sqrt() * z
            } else {
                let (n, s, _) = stats(&self.trees[t].nodes[id].members, &self.resid);
                let denom = self.sigma2 + n as f64 * self.tau2;
                self.tau2 * s / denom + (self.sigma2 * self.tau2 / denom).sqrt() * z
            };
            self.trees[t].nodes[id].mu = mu;
        }
    }

    fn draw_sigma(&mut self) {
        let (dof, sse) = if self.cfg.prior_only {
            (self.cfg.nu, 0.0)
        } else {
            let sse: f64 = self
                .ys
                .iter()
                .zip(&self.fit)
                .map(|(y, f)| (y - f) * (y - f))
                .sum();
            (self.cfg.nu + self.data.n() as f64, sse)
        };
        let chi: f64 = ChiSquared::new(dof)
            .expect("positive degrees of freedom")
            .sample(&mut self.rng);
        self.sigma2 = (self.cfg.nu * self.lambda + sse) / chi;
    }
}

/// Runs burn-in, then hands every kept draw to `f` as it is produced.
pub fn fit_with<F>(data: &Dataset, cfg: &SamplerConfig, mut f: F) -> Result<()>
where
    F: FnMut(usize, &Ensemble, f64) -> Result<()>,
{
    let mut s = Sampler::new(data, cfg.clone())?;
    for _ in 0..cfg.n_burn {
        s.step();
    }
    for d in 0..cfg.n_draws {
        for _ in 0..cfg.thin {
            s.step();
        }
        f(d, &s.ensemble(), s.sigma())?;
    }
    Ok(())
}

/// All kept posterior draws.
pub fn fit(data: &Dataset, cfg: &SamplerConfig) -> Result<Vec<PosteriorDraw>> {
    let mut out = Vec::with_capacity(cfg.n_draws);
    fit_with(data, cfg, |_, ens, sigma| {
        out.push(PosteriorDraw {
            ensemble: ens.clone(),
            sigma,
        });
        Ok(())
    })?;
    Ok(out)
}
