//! Hedging and utility maximization with proportional transaction costs on
//! binary scenario-tree markets.
//!
//! The crate builds capped-volatility random-walk markets, evaluates the
//! transaction-cost wealth functional, solves expected-utility problems over
//! grid strategies by brute force and dynamic programming, and provides the
//! diagnostics (consistent price systems, prediction processes, strategy
//! projection, path metrics) used to study how the values behave as the
//! number of trading periods grows.

pub mod cps;
pub mod diagnostics;
pub mod error;
pub mod market;
pub mod paths;
pub mod solver;
pub mod utility;
pub mod wealth;

pub use error::{Error, Result};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
