//! Robust cooperative downlink precoding for a two-RRH cloud radio access
//! network in which the second RRH transmits with an unknown integer delay
//! relative to the first.
//!
//! The crate computes Gaussian achievable rates for a given set of
//! transmit covariances, maximizes the worst-case rate over UEs and delay
//! hypotheses with a convex-concave procedure, and runs Monte Carlo sweeps
//! comparing the robust design against simpler baselines.

// `!(x > y)` is used on purpose so NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::wrong_self_convention)]

pub mod cccp;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod rates;
pub mod selftest;
pub mod solver;
pub mod surrogate;

pub use cccp::{run_cccp, run_scheme_suite, CccpOptions, CccpTrace, Scheme, SuiteResult};
pub use error::{Error, Result};
pub use model::{ChannelSet, PrecoderSolution, RateReport, SystemConfig};
