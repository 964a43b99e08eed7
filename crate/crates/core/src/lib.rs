//! Simulation and learning core for IRS phase-shift control in an
//! IRS-aided MISO link with spatiotemporally correlated channels.
//!
//! Everything here is `no_std` + `alloc`: the channel simulator, the exact
//! signal model and its oracles, the windowed MDP, a small dense-network
//! stack with Adam and Fourier-feature preprocessing, and the twin-critic
//! actor-critic trainer. File IO, configuration and the CLI live in the
//! `irsrl` crate.
#![no_std]

extern crate alloc;

pub mod agent;
pub mod channel;
pub mod env;
mod error;
mod math;
pub mod nn;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};

/// Complex sample type used by the channel and signal models.
pub type C64 = num_complex::Complex64;
