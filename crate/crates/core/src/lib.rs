//! U-statistics on bipartite networks.
//!
//! This crate implements statistical inference for bipartite networks whose
//! adjacency matrices are row-column exchangeable (RCE): generative models
//! (block models, product graphons), U-statistics over p×q submatrix kernels
//! with naive and whole-matrix fast paths, estimators of their asymptotic
//! variances built from per-row/per-column conditional means, studentized
//! estimation and testing, two-network comparison, and a simulation harness
//! for Q-Q, coverage and timing studies.

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod fast;
pub mod inference;
pub mod kernels;
pub mod matrix;
pub mod models;
pub mod rng;
pub mod sim;
pub mod ustat;
pub mod varest;

pub use error::Error;
pub use kernels::Kernel;
pub use matrix::{BipartiteMatrix, IndexSet};
pub use ustat::UStatResult;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
