//! Trees, ensembles, the input domain, and terminal-node hyperrectangles.
//!
//! Dimensions are 0-based here. A split `x_dim < cut` sends a point to the
//! left child and everything else to the right, so the box of every terminal
//! node is a product of half-open intervals `[lo, hi)`, closed on top only
//! where `hi` is the domain's upper bound.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Bounded hyperrectangle `[lo_1, hi_1] x ... x [lo_p, hi_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::EmptyDomain);
        }
        for (dim, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidMargin { dim, lo: a, hi: b });
            }
        }
        Ok(Domain { lo, hi })
    }

    /// The unit hypercube `[0, 1]^p`.
    ///
    /// Panics if `p == 0`.
    pub fn unit(p: usize) -> Self {
        assert!(p > 0, "domain must have at least one dimension");
        Domain {
            lo: vec![0.0; p],
            hi: vec![1.0; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// The full margin on `dim` as a closed interval.
    pub fn margin(&self, dim: usize) -> Interval {
        Interval {
            lo: self.lo[dim],
            hi: self.hi[dim],
            closed: true,
        }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&a, &b))| a <= v && v <= b)
    }
}

/// Interval `[lo, hi)`, or `[lo, hi]` when `closed` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

impl Interval {
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            closed: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && (x < self.hi || (self.closed && x == self.hi))
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `a ⊆ self` as sets.
    pub fn covers(&self, a: &Interval) -> bool {
        self.lo <= a.lo && (a.hi < self.hi || (a.hi == self.hi && (self.closed || !a.closed)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub dim: usize,
    pub cut: f64,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.dim] < self.cut
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(f64),
    Split {
        rule: SplitRule,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn leaf(value: f64) -> Self {
        Node::Leaf(value)
    }

    pub fn split(dim: usize, cut: f64, left: Node, right: Node) -> Self {
        Node::Split {
            rule: SplitRule { dim, cut },
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(mu) => return *mu,
                Node::Split { rule, left, right } => {
                    node = if rule.goes_left(x) { left } else { right };
                }
            }
        }
    }

    fn for_each_rule<F: FnMut(&SplitRule)>(&self, f: &mut F) {
        if let Node::Split { rule, left, right } = self {
            f(rule);
            left.for_each_rule(f);
            right.for_each_rule(f);
        }
    }

    fn for_each_leaf_mut<F: FnMut(&mut f64)>(&mut self, f: &mut F) {
        match self {
            Node::Leaf(mu) => f(mu),
            Node::Split { left, right, .. } => {
                left.for_each_leaf_mut(f);
                right.for_each_leaf_mut(f);
            }
        }
    }
}

/// A binary regression tree: topology plus split rules plus leaf means.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    root: Node,
}

impl From<Node> for Tree {
    fn from(root: Node) -> Self {
        Tree { root }
    }
}

impl Tree {
    pub fn new(root: Node) -> Self {
        Tree { root }
    }

    pub fn stump(value: f64) -> Self {
        Tree {
            root: Node::Leaf(value),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Leaf value reached by `x`. No bounds checking.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    pub fn for_each_rule<F: FnMut(&SplitRule)>(&self, mut f: F) {
        self.root.for_each_rule(&mut f);
    }

    pub fn for_each_leaf_mut<F: FnMut(&mut f64)>(&mut self, mut f: F) {
        self.root.for_each_leaf_mut(&mut f);
    }

    pub fn n_leaves(&self) -> usize {
        let mut n = 0;
        self.for_each_rule(|_| n += 1);
        n + 1
    }

    pub fn n_internal(&self) -> usize {
        self.n_leaves() - 1
    }
}

/// Terminal node `k` of a tree: its box `R_k`, leaf value `mu_k`, and the
/// sorted set `v(k)` of dimensions split on along its root path.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalRegion {
    pub bounds: Vec<Interval>,
    pub mu: f64,
    pub split_dims: Vec<usize>,
}

impl TerminalRegion {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(Interval::width).product()
    }

    pub fn splits_on_any(&self, dims: &[usize]) -> bool {
        self.split_dims.iter().any(|d| dims.contains(d))
    }
}

/// Boxes of all leaves of `tree` over `domain`, in depth-first left-to-right order.
///
/// Fails if a split sits outside the current box of its node, references a
/// dimension beyond `domain.dim()`, or a leaf is not finite.
pub fn terminal_regions(tree: &Tree, domain: &Domain) -> Result<Vec<TerminalRegion>> {
    let p = domain.dim();
    let root_box: Vec<Interval> = (0..p).map(|j| domain.margin(j)).collect();
    let mut out = Vec::new();
    let mut stack: Vec<(&Node, Vec<Interval>, Vec<usize>)> =
        vec![(&tree.root, root_box, Vec::new())];
    while let Some((node, bounds, path)) = stack.pop() {
        match node {
            Node::Leaf(mu) => {
                if !mu.is_finite() {
                    return Err(Error::NonFiniteLeaf);
                }
                let mut split_dims = path;
                split_dims.sort_unstable();
                split_dims.dedup();
                out.push(TerminalRegion {
                    bounds,
                    mu: *mu,
                    split_dims,
                });
            }
            Node::Split { rule, left, right } => {
                if rule.dim >= p {
                    return Err(Error::DimensionOutOfRange { dim: rule.dim, p });
                }
                let cur = bounds[rule.dim];
                if !(cur.lo < rule.cut && rule.cut < cur.hi) {
                    return Err(Error::DegenerateSplit {
                        dim: rule.dim,
                        cut: rule.cut,
                        lo: cur.lo,
                        hi: cur.hi,
                    });
                }
                let mut lb = bounds.clone();
                lb[rule.dim] = Interval::half_open(cur.lo, rule.cut);
                let mut rb = bounds;
                rb[rule.dim] = Interval {
                    lo: rule.cut,
                    hi: cur.hi,
                    closed: cur.closed,
                };
                let mut lp = path.clone();
                lp.push(rule.dim);
                let mut rp = path;
                rp.push(rule.dim);
                // right pushed first so the left subtree is emitted first
                stack.push((right, rb, rp));
                stack.push((left, lb, lp));
            }
        }
    }
    Ok(out)
}

/// Sum of `m >= 1` trees over a shared domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    domain: Domain,
    trees: Vec<Tree>,
}

impl Ensemble {
    /// Validates every tree against the domain.
    pub fn new(domain: Domain, trees: Vec<Tree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        for t in &trees {
            terminal_regions(t, &domain)?;
        }
        Ok(Ensemble { domain, trees })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_leaves(&self) -> usize {
        self.trees.iter().map(Tree::n_leaves).sum()
    }

    /// Sum over trees of the leaf reached by `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (dim, &v) in x.iter().enumerate() {
            if !(self.domain.lo[dim] <= v && v <= self.domain.hi[dim]) {
                return Err(Error::PointOutsideDomain { dim, value: v });
            }
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.eval(x)).sum()
    }

    /// Terminal regions of every tree, in tree order.
    pub fn regions(&self) -> Vec<Vec<TerminalRegion>> {
        self.trees
            .iter()
            .map(|t| terminal_regions(t, &self.domain).expect("validated at construction"))
            .collect()
    }

    /// Strictly increasing distinct cutpoints used on `dim` anywhere in the
    /// ensemble. Cutpoints are compared exactly.
    pub fn unique_cutpoints(&self, dim: usize) -> Vec<f64> {
        let mut cuts = Vec::new();
        for t in &self.trees {
            t.for_each_rule(|r| {
                if r.dim == dim {
                    cuts.push(r.cut);
                }
            });
        }
        cuts.sort_unstable_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }

    /// Adds `shift` to every leaf of tree `t`.
    pub fn shift_tree(&mut self, t: usize, shift: f64) {
        self.trees[t].for_each_leaf_mut(|mu| *mu += shift);
    }

    /// Multiplies every leaf by `s`.
    pub fn scale(&mut self, s: f64) {
        for t in &mut self.trees {
            t.for_each_leaf_mut(|mu| *mu *= s);
        }
    }
}

/// Free-function form of [`Ensemble::unique_cutpoints`].
pub fn unique_cutpoints(ens: &Ensemble, dim: usize) -> Vec<f64> {
    ens.unique_cutpoints(dim)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Root `x2 < 0.7`; left `x1 < 0.2`; right `x1 < 0.4`.
    pub fn four_leaf_tree(mu: [f64; 4]) -> Tree {
        Node::split(
            1,
            0.7,
            Node::split(0, 0.2, Node::leaf(mu[0]), Node::leaf(mu[1])),
            Node::split(0, 0.4, Node::leaf(mu[2]), Node::leaf(mu[3])),
        )
        .into()
    }

    /// Tree A: `x_i < 0.5 -> {1, 100}`; tree B: `x_j < 2/3 -> (x_j < 1/3 -> {-2, 0}), 2`.
    pub fn two_tree_ensemble() -> Ensemble {
        let a = Node::split(0, 0.5, Node::leaf(1.0), Node::leaf(100.0));
        let b = Node::split(
            1,
            2.0 / 3.0,
            Node::split(1, 1.0 / 3.0, Node::leaf(-2.0), Node::leaf(0.0)),
            Node::leaf(2.0),
        );
        Ensemble::new(Domain::unit(2), vec![a.into(), b.into()]).unwrap()
    }

    /// `f = 1{x1 >= .5, x2 >= .5}`.
    pub fn interaction_tree() -> Ensemble {
        let t = Node::split(
            0,
            0.5,
            Node::leaf(0.0),
            Node::split(1, 0.5, Node::leaf(0.0), Node::leaf(1.0)),
        );
        Ensemble::new(Domain::unit(2), vec![t.into()]).unwrap()
    }
}
