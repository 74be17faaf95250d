//! Posterior Sobol' analysis of sum-of-trees models: a sampler, file formats,
//! designs and the simulation harness built on `treesobol-core`.

pub mod error;
pub mod harness;
pub mod io;
pub mod lhd;
pub mod sampler;

pub use error::{Error, Result};
pub use sampler::{fit, fit_with, Dataset, PosteriorDraw, Sampler, SamplerConfig};
