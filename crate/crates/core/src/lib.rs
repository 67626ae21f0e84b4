//! Restless-bandit index policies: Whittle indices, mean-field dynamics,
//! finite-N simulation and exact small-N baselines.
//!
//! The pipeline mirrors the analysis workflow end to end:
//!
//! 1. [`model`] — arm definitions (synchronous and asynchronous),
//!    validation, uniformization, model files.
//! 2. [`whittle`] — subsidized single-arm solver, indexability testing,
//!    adaptive-greedy index computation with an independent grid oracle.
//! 3. [`meanfield`] — the piecewise-affine population map, its unique
//!    fixed point, singularity and stability classification, empirical
//!    attractor/cycle detection, and the asynchronous drift.
//! 4. [`simulate`] — count-based Monte-Carlo of the index policy at
//!    finite N (synchronous and event-driven asynchronous), fractional
//!    activation modes, concentration diagnostics.
//! 5. [`exact`] — optimal and policy values on the exchangeable
//!    configuration space, plus the occupation-measure relaxation.
//! 6. [`channels`] — the two-class Gilbert-Elliott belief bandit with
//!    closed-form indices and its pinned-mass fixed point.
//! 7. [`experiments`] — random-instance scans, decay-rate fitting and
//!    sweep drivers.

pub mod channels;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod fixtures;
mod lp;
pub mod meanfield;
pub mod model;
pub mod simulate;
pub mod whittle;

pub use error::{Error, Result};
pub use model::{AsyncBanditModel, BanditModel, Configuration, Instance};
