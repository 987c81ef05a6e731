//! Reflecting active-passive population dynamics.
//!
//! Three model families share this crate:
//!
//! * [`lattice`] and [`kmc`]: a two-species simple exclusion lattice gas in a
//!   square room with reflecting walls and a single exit door, evolved by an
//!   exact (rejection-free) kinetic Monte Carlo scheme. [`observables`] turns
//!   the resulting event logs into currents, exit times and snapshots.
//! * [`sde`]: the one-dimensional Skorokhod map and Euler–Maruyama schemes for
//!   the free and reflected Ornstein–Uhlenbeck process.
//! * [`queue`]: an M/M/ω/N birth–death queue with its analytic stationary law,
//!   plus the centred/rescaled arrival paths whose reflected versions converge
//!   to reflected Brownian motion.
//!
//! Replica ensembles are farmed out through [`ensemble`], which runs on rayon
//! when the `parallel` feature is enabled and sequentially otherwise. Every
//! replica draws from its own stream derived from `(master seed, replica)`, so
//! results never depend on the scheduling.

// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod ensemble;
pub mod error;
pub mod kmc;
pub mod lattice;
pub mod observables;
pub mod queue;
pub mod rng;
pub mod runner;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
