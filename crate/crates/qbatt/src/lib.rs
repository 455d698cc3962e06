//! Simulation and analysis toolkit for dissipative quantum batteries charged
//! through a homodyne-feedback-controlled charger.
//!
//! The crate computes steady-state energetics (stored energy, ergotropy,
//! charging efficiency) for single-cell and multiparticle batteries coupled
//! to bosonic or fermionic thermal reservoirs, three independent ways:
//!
//! - closed-form steady states and energetics ([`steady`]),
//! - numerical Liouvillian kernel extraction ([`steady`], [`model`]),
//! - stochastic homodyne trajectories with direct feedback ([`trajectories`]).
//!
//! Deterministic time evolution ([`dynamics`]) and a declarative sweep engine
//! with CSV output ([`sweep`]) sit on top. Energies are reported in units of
//! ω0 and rates in units of the charger–battery coupling g wherever data
//! leaves the crate.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod steady;
pub mod sweep;
pub mod trajectories;

pub use error::{Error, Result};
