//! Distance-based non-Markovianity measures for qubit dynamical maps.
//!
//! The crate provides:
//!
//! - [`state`]: exact finite-dimensional state algebra — density matrices,
//!   entropies, quantum mutual information, trace distance, relative
//!   entropy, partial traces and Kraus application;
//! - [`channels`]: the amplitude-damping and phase-damping channel
//!   families with time-dependent rates, their Kraus snapshots,
//!   CP-divisibility classification and a qubit dilation;
//! - [`sampling`]: Haar-uniform states, induced-measure density matrices
//!   and divisible-parameter draws with splittable, reproducible seeding;
//! - [`measures`]: the max-distance, min-distance and Choi-state
//!   non-Markovianity estimators, evaluated by nested sampling
//!   optimization over certified candidate sets;
//! - [`bounds`]: the collision-model construction of ε-Markovian maps,
//!   ε-separability membership, entanglement estimators and the
//!   entanglement-based bound verifier.
//!
//! Conventions: all entropic quantities are in bits (base-2 logarithms;
//! multiply by ln 2 for nats), and the trace distance carries no 1/2
//! prefactor, so it ranges over [0, 2].

pub mod bounds;
pub mod channels;
pub mod error;
pub mod measures;
pub mod numerics;
pub mod sampling;
pub mod state;

pub use error::{Error, Result};
