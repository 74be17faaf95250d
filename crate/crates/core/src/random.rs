//! Random valid ensembles for property tests and benchmarks.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::domain::{Domain, Ensemble, Node, Tree};

/// Shape of generated ensembles.
#[derive(Debug, Clone, Copy)]
pub struct RandomEnsemble {
    pub max_trees: usize,
    pub max_leaves: usize,
    /// Cutpoints are drawn from `grid - 1` equispaced interior points per
    /// dimension, so separate trees share split rules now and then.
    pub grid: usize,
}

impl Default for RandomEnsemble {
    fn default() -> Self {
        RandomEnsemble {
            max_trees: 6,
            max_leaves: 8,
            grid: 16,
        }
    }
}

enum Proto {
    Leaf {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Split {
        dim: usize,
        cut: f64,
        left: Box<Proto>,
        right: Box<Proto>,
    },
}

impl Proto {
    fn leaves(&mut self) -> Vec<&mut Proto> {
        match self {
            Proto::Leaf { .. } => vec![self],
            Proto::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }

    fn into_node<R: Rng>(self, rng: &mut R, leaf: &mut impl FnMut(&mut R) -> f64) -> Node {
        match self {
            Proto::Leaf { .. } => Node::leaf(leaf(rng)),
            Proto::Split {
                dim,
                cut,
                left,
                right,
            } => {
                let l = left.into_node(rng, leaf);
                let r = right.into_node(rng, leaf);
                Node::split(dim, cut, l, r)
            }
        }
    }
}

impl RandomEnsemble {
    /// One tree with between 1 and `max_leaves` leaves and leaf values from `leaf`.
    pub fn tree<R: Rng>(
        &self,
        rng: &mut R,
        dom: &Domain,
        leaf: &mut impl FnMut(&mut R) -> f64,
    ) -> Tree {
        let p = dom.dim();
        let target = rng.random_range(1..=self.max_leaves);
        let mut root = Proto::Leaf {
            lo: dom.lo().to_vec(),
            hi: dom.hi().to_vec(),
        };
        let mut n_leaves = 1;
        let mut attempts = 0;
        while n_leaves < target && attempts < 50 * self.max_leaves {
            attempts += 1;
            let mut leaves = root.leaves();
            let pick = rng.random_range(0..leaves.len());
            let node = &mut leaves[pick];
            let Proto::Leaf { lo, hi } = &**node else {
                unreachable!()
            };
            let dim = rng.random_range(0..p);
            let (a, b) = (dom.lo()[dim], dom.hi()[dim]);
            let cuts: Vec<f64> = (1..self.grid)
                .map(|k| a + (b - a) * k as f64 / self.grid as f64)
                .filter(|&c| lo[dim] < c && c < hi[dim])
                .collect();
            if cuts.is_empty() {
                continue;
            }
            let cut = cuts[rng.random_range(0..cuts.len())];
            let (mut lhi, mut rlo) = (hi.clone(), lo.clone());
            lhi[dim] = cut;
            rlo[dim] = cut;
            let left = Proto::Leaf {
                lo: lo.clone(),
                hi: lhi,
            };
            let right = Proto::Leaf {
                lo: rlo,
                hi: hi.clone(),
            };
            **node = Proto::Split {
                dim,
                cut,
                left: Box::new(left),
                right: Box::new(right),
            };
            n_leaves += 1;
        }
        root.into_node(rng, leaf).into()
    }

    /// Between 1 and `max_trees` trees with leaves uniform on `[-1, 1]`.
    pub fn sample<R: Rng>(&self, rng: &mut R, dom: &Domain) -> Ensemble {
        self.sample_with(rng, dom, &mut |r: &mut R| r.random_range(-1.0..1.0))
    }

    pub fn sample_with<R: Rng>(
        &self,
        rng: &mut R,
        dom: &Domain,
        leaf: &mut impl FnMut(&mut R) -> f64,
    ) -> Ensemble {
        let n = rng.random_range(1..=self.max_trees);
        let trees = (0..n).map(|_| self.tree(rng, dom, leaf)).collect();
        Ensemble::new(dom.clone(), trees).expect("generated trees are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_ensembles_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gen = RandomEnsemble::default();
        let dom = Domain::new(vec![0.0, -2.0, 5.0], vec![1.0, 2.0, 6.0]).unwrap();
        for _ in 0..200 {
            let ens = gen.sample(&mut rng, &dom);
            assert!(ens.trees().len() <= 6);
            assert!(ens.trees().iter().all(|t| t.n_leaves() <= 8));
            assert_eq!(ens.regions().len(), ens.trees().len());
        }
    }
}
