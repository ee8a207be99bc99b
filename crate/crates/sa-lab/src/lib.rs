//! Numerical laboratory for stochastic approximation procedures driven by a
//! predictable clock.
//!
//! The crate simulates Robbins-Monro style recursions of the form
//! `z_i = z_{i-1} + H_i(z_{i-1}) dK_i + l_i(z_{i-1}) dm_i` on deterministic
//! time grids, decomposes the squared error into compensator and martingale
//! parts, audits the convergence conditions that govern almost-sure
//! convergence and convergence rates, normalizes terminal errors for
//! distribution checks, and runs reproducible parallel Monte Carlo studies
//! over all of the above.
//!
//! Start with the `examples/` directory: each example is a runnable tour of
//! one capability (recursive estimation, central limit checks, averaging,
//! condition audits, rate monitors, pathwise decompositions). The thin
//! `sa-lab` binary exposes the same capabilities as subcommands driven by an
//! INI config file.

pub mod asymptotics;
pub mod cli;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod process_core;
pub mod rm_engine;
pub mod rng;

pub use error::{Error, Result};
