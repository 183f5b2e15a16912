//! Emission spectra and frequency-filtered photon correlations of small open
//! quantum systems.
//!
//! The crate is organized bottom-up:
//!
//! - [`ops`]: operators on tensor-product spaces and the Liouvillian.
//! - [`dynamics`]: steady states, regression-theorem correlators, spectra.
//! - [`sensors`]: frequency-filtered correlations from weakly coupled
//!   two-level sensors.
//! - [`models`]: resonance fluorescence, dressed-state predictions and the
//!   emitter-cavity bundle configuration.
//! - [`sweep`]: grid sweeps over frequency space and CSV output.
//! - [`cli`]: configuration parsing and command dispatch.
//!
//! All rates and frequencies are in units of the emitter decay rate γ, in the
//! frame rotating at the laser frequency.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod ops;
pub mod parallel;
pub mod sensors;
pub mod sweep;

pub use error::{Error, Result};
