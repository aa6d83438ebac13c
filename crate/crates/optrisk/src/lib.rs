//! Risk simulation engine for books of European options.
//!
//! The pipeline decodes arbitrage-constrained factor representations of
//! normalized call-price surfaces, estimates constrained SDE dynamics for
//! the factors and the underlying, simulates joint scenarios, and computes
//! and backtests portfolio Value-at-Risk against a Heston-calibrated
//! filtered-historical-simulation baseline.
//!
//! Start from the `examples/` directory for runnable walkthroughs of each
//! capability, or the `optrisk` binary for the staged pipeline.

pub mod dynamics;
pub mod error;
pub mod factor_model;
pub mod market_data;
pub mod math;
pub mod rng;
pub mod static_arbitrage;

pub mod fhs;

pub use error::{Error, Result};
