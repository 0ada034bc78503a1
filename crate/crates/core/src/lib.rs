//! Monte Carlo link-level simulator for in-band small-cell wireless backhaul
//! under a massive-MIMO base station.
//!
//! The crate compares direct zero-forcing to the UEs against three ways of
//! relaying through small cells: half-duplex time division (CTDD), full
//! duplex (ZDD) and full duplex with interference rejection at the base
//! station (ZDD-IR).

pub mod channel;
pub mod cli;
pub mod error;
pub mod link_rates;
pub mod matrix_ops;
pub mod montecarlo;
pub mod selftest;
pub mod strategies;

pub use error::{Error, Result};
