//! Block UCB policies for multi-armed bandits whose activations consume
//! resources that are replenished at a constant rate.
//!
//! The crate is organised bottom-up:
//!
//! - [`lp`]: exact rational solution of the activation LP, its dual, reduced
//!   costs and the integer block compositions of basic feasible solutions.
//! - [`env`]: reward families, the budget ledger and the simulated
//!   environment.
//! - [`blocks`]: initial sampling blocks and LP blocks with prefix-feasible
//!   activation orders.
//! - [`policy`]: the Z-UCB index policy and its simulation loop.
//! - [`analysis`]: regret, its decomposition and the asymptotic lower bound.
//! - [`harness`]: experiment configuration, replications and result files.

pub mod analysis;
pub mod blocks;
pub mod env;
pub mod error;
pub mod harness;
pub mod lp;
pub mod policy;
pub mod rational;

pub use error::{Error, Result};
pub use rational::Rational;
