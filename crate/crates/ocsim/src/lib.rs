//! Simulation toolkit for linear-optical cluster-state quantum computation.
//!
//! The crate is organised around a dense state-vector oracle ([`simcore`]),
//! cluster graphs and the measurement deletion rule ([`graphstate`]), a
//! compiler from small circuits to adaptive measurement patterns ([`mbqc`]),
//! Monte Carlo models of the non-deterministic entangling gates used to grow
//! clusters ([`growth`], [`microcluster`]), and a minimal Fock-space layer for
//! the dual-rail photonic encoding ([`dualrail`]). The `ocsim` binary exposes
//! the pieces as reproducible, seeded experiments.

pub mod cli;
pub mod dualrail;
pub mod error;
pub mod graphstate;
pub mod growth;
pub mod mbqc;
pub mod microcluster;
pub mod rng;
pub mod simcore;

pub use error::{Error, Result};
pub use rng::RngStream;
