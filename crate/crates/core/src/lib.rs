//! Deterministic discrete-event simulator of user-node interaction in
//! DAG-based distributed ledgers.
//!
//! Users pick nodes to issue their transactions through one of four
//! selection policies (uniform, reputation-weighted, delay-aware,
//! cost-aware with a spend threshold). Nodes meter their ledger access
//! with an AIMD rate setter feeding a shared deficit-round-robin
//! scheduler, estimate the delay of their local transaction pool, and
//! price access with a proportional fee controller.
//!
//! The crate is `no_std`-compatible (`alloc` required); all IO lives in
//! the companion CLI crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod access;
pub mod engine;
pub mod error;
mod math;
pub mod model;
pub mod policy;
pub mod qos;
mod rng;

pub use engine::{run, run_scenario, SimResult};
pub use error::{ConfigError, PolicyError};
pub use model::{generate_reputation, NetworkConfig, Policy, ReputationVector, Scenario};
