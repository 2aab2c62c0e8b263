//! Simulation and finite-size-scaling analysis of the quasiperiodically
//! kicked quantum rotor, a one-dimensional system whose dynamics is
//! equivalent to a three-dimensional Anderson model.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`] and [`rotor`]: physical parameters, disorder realizations and
//!   the split-step Floquet propagator.
//! * [`classical`]: the classical modulated standard map, used to check that
//!   the classical dynamics is diffusive everywhere on the sweep.
//! * [`observables`]: ensemble averages of Π₀(t) and ⟨p²⟩(t), momentum
//!   distributions and shape fits.
//! * [`scaling`]: Λ(t), growth exponents, regime classification, the
//!   assumption-free scaling collapse and the critical fit of ξ(K).
//! * [`runner`]: configuration, parameter sweeps, phase diagrams and
//!   reproducible file output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod fit;
pub mod observables;
pub mod params;
pub mod rotor;
pub mod runner;
pub mod scaling;

pub use error::{Error, Result};
pub use params::{derive_seed, PhaseMode, Realization, SimParams};
pub use rotor::{evolve, kick_strength_at, Propagator, QuantumState, RealizationSeries};
