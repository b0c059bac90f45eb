//! Exact simulation of driven, disordered quantum Ising chains
//!
//! `H(t) = Σ h_i Z_i + J Σ Z_i Z_{i+1} + f(t) F Σ X_i` on an open chain,
//! propagated stroboscopically over drive periods, together with the
//! random-circuit baseline, spectral and Porter-Thomas diagnostics, Magnus
//! effective Hamiltonians and a quenched-disorder generative-model trainer.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod evolution;
pub mod genmodel;
pub mod magnus;
pub mod model;
pub mod stats;
pub mod streams;

pub use error::{Result, SimError};
pub use evolution::{FloquetSpectrum, IntegratorConfig};
pub use model::{DisorderRealization, DriveEnvelope, ModelParams, StateVector};
pub use streams::realization_rng;
