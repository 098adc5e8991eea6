//! Causal Bayesian optimization.
//!
//! The crate is organised bottom-up: [`graph`] holds causal graphs and
//! exploration sets, [`scm`] simulates structural equation models, and
//! [`estimation`] turns observational data into interventional mean and
//! variance surfaces. Those feed the causal Gaussian-process prior in [`gp`],
//! the acquisition and observe/intervene policy in [`policy`], and the
//! optimization loop in [`cbo`]. [`scenario`] bundles ready-made problems.

pub mod cbo;
pub mod estimation;
pub mod expr;
pub mod gp;
pub mod graph;
pub mod policy;
pub mod rng;
pub mod scenario;
pub mod scm;
