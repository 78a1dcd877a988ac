//! Learning the structure and parameters of discrete graphical models from
//! samples via interaction screening.
//!
//! The library is organized around per-node convex screening objectives:
//!
//! - [`model`]: factor-graph families, cliques and spans, interaction order.
//! - [`basis`]: basis function tables and the local/global centerings.
//! - [`oracle`]: exact enumeration of small models; ground truth for tests.
//! - [`sampler`]: exact i.i.d. and Gibbs samplers.
//! - [`giso`]: the per-node screening objective, its gradient and residuals.
//! - [`solver`]: entropic descent over the lifted simplex and the per-node
//!   estimator built on it.
//! - [`projection`]: equi-cost projections onto zero-sum constraint sets.
//! - [`suprise`]: multi-round structure and parameter recovery.
//! - [`conditioning`]: clique parameterization matrices and learnability
//!   diagnostics.
//! - [`generate`], [`io`], [`cli`]: model generators, file formats and the
//!   command-line pipeline.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability; `grise --help` documents the CLI.

pub mod basis;
pub mod cli;
pub mod conditioning;
pub mod error;
pub mod generate;
pub mod giso;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod projection;
pub mod sampler;
pub mod solver;
pub mod suprise;
pub mod testkit;

pub use error::{Error, Result};
pub use giso::LocalProblem;
pub use model::{
    Alphabet, BasisKind, BasisTag, CliqueStructure, Factor, FactorGraph, FactorId, GraphicalModel,
    ModelFamily, DEFAULT_ENUMERATION_CAP,
};
pub use projection::ConstraintDescriptor;
pub use sampler::SampleSet;
pub use solver::{SolverOptions, SolverReport};
pub use suprise::{StructureReport, SupriseConfig};
