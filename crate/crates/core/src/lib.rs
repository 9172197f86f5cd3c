//! Execution-ticket lottery economics.
//!
//! A fixed pool of `n` tickets is drawn uniformly once per slot; the winning
//! ticket collects that slot's reward, is burned, and a fresh ticket is minted
//! in its place. This crate provides:
//!
//! * [`model`]: economy constants, reward laws, discounting.
//! * [`analytics`]: closed-form ticket and reward-stream valuations, with
//!   truncated-series oracles that sum the defining expectations directly.
//! * [`sim`]: the slot state machine and deterministic parallel Monte Carlo.
//! * [`market`]: pricing policies, pooling and multi-block bonuses.
//! * [`harness`]: configuration, experiment runners and report output for the
//!   `etsim` binary.

pub mod analytics;
mod error;
pub mod harness;
pub mod market;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
