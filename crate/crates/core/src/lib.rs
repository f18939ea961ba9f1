//! Bayesian optimization of functions that decompose into a sum of
//! low-dimensional components over possibly overlapping variable groups.
//!
//! The pieces, bottom up:
//!
//! - [`graph`]: dependency graphs, maximal cliques, min-fill triangulation and
//!   junction trees.
//! - [`gp`]: the additive squared-exponential kernel, per-component and full
//!   posteriors, the marginal likelihood and synthetic test functions.
//! - [`acquisition`]: UCB tables per component and their exact joint
//!   maximization by max-sum message passing.
//! - [`structure`]: Gibbs sampling over graphs and lengthscales.
//! - [`bo`]: the optimization loop, regret traces and graph-recovery metrics.
//! - [`analysis`]: variance-approximation scans and information gain.

pub mod acquisition;
pub mod analysis;
pub mod bo;
pub mod domain;
pub mod error;
pub mod gp;
pub mod graph;
pub mod io;
pub mod rng;
pub mod structure;

pub use domain::{Domain, GridPoint, ObservationSet};
pub use error::{Error, Result};
pub use graph::DependencyGraph;
