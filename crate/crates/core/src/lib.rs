//! Exact variance-based global sensitivity analysis for additive ensembles of
//! axis-aligned regression trees.
//!
//! A sum-of-trees function is piecewise constant on hyperrectangles, so every
//! conditional expectation `E[f(X) | X_P]` under an independent product measure
//! is again a finite sum of box indicators. The [`sobol`] module turns that into
//! closed-form Sobol' indices (first order, any higher order, total effects)
//! without any Monte Carlo integration.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the MCMC sampler
//! and the command line live in the `treesobol` companion crate.
//!
//! ```
//! use treesobol_core::{Domain, Ensemble, Node, ProductMeasure, SobolEngine, IndexSet};
//!
//! let domain = Domain::unit(2);
//! let tree = Node::split(0, 0.5, Node::leaf(1.0), Node::leaf(100.0));
//! let ens = Ensemble::new(domain, vec![tree.into()]).unwrap();
//! let measure = ProductMeasure::uniform(ens.domain());
//! let mut engine = SobolEngine::new(&ens, &measure).unwrap();
//! let v1 = engine.sobol_v(&IndexSet::single(0, 2).unwrap()).unwrap();
//! assert!((v1 - 2450.25).abs() < 1e-9);
//! ```

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod activity;
pub mod domain;
mod error;
pub mod functions;
pub mod measure;
pub mod oracle;
pub mod random;
pub mod rank;
pub mod sobol;

pub use activity::{
    cond_expect_1d, jump_count, one_way_counts, standardize, unique_rule_counts,
    PiecewiseConstant1D, Standardized, DEFAULT_JUMP_TOL,
};
pub use domain::{Domain, Ensemble, Interval, Node, SplitRule, TerminalRegion, Tree};
pub use error::{Error, Result};
pub use functions::TestFunction;
pub use measure::{Marginal, ProductMeasure};
pub use random::RandomEnsemble;
pub use rank::{competition_rank, d_r, discordances, kemeny_snell, Ranking};
pub use sobol::{
    aggregate, aggregate_reports, aggregate_with, report, IndexSet, KernelMode, KernelOutput,
    PosteriorReport, SobolEngine, SobolReport,
};
