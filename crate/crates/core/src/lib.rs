//! Analytic and simulated coverage statistics for cache-enabled networks
//! with interference nulling.
//!
//! The crate computes the successful transmission probability, its
//! per-location distribution (the meta distribution) through the first two
//! moments, a Monte Carlo cross-check, and a coordinate-descent optimizer
//! over the cooperation radius, nulling budget and cache factor.

// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod error;
pub mod meta;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod parallel;
pub mod specfun;

pub use error::{Error, Result};
