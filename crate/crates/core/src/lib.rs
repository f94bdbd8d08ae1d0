//! Pseudo-spectral convex-integration engine for the stochastic
//! Navier–Stokes equations on the torus T³ = [0, 2π)³.
//!
//! The crate builds wild solutions level by level and measures every
//! identity and inductive quantity the construction relies on:
//!
//! * [`field`] — spectral fields, Leray projection, inverse divergence,
//!   heat semigroup, causal mollifiers, norms, `WNS1` snapshots;
//! * [`geometry`] — the rational direction set and its coefficient maps;
//! * [`jets`] — intermittent jets, correctors, potentials and their bounds;
//! * [`noise`] — the stochastic Stokes convolution, stopping times, restarts;
//! * [`scheme`] — parameters, the level step for both schemes, gluing;
//! * [`ledger`] — energy processes, monotonicity checks, reports;
//! * [`cli`] — run configuration and batch commands.

pub mod cli;
pub mod error;
pub mod field;
pub mod geometry;
pub mod jets;
pub mod ledger;
pub mod noise;
pub mod scheme;

pub use error::{Result, WnsError};
