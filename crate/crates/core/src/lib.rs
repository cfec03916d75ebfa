//! Data-driven reduced stochastic models for the Kuramoto-Sivashinsky
//! equation: a pseudospectral ETDRK4 solver for the full system, the
//! `K`-mode truncation with its model-error series, a NARMAX closure with
//! inertial-manifold-inspired nonlinear terms, and the statistics used to
//! judge it.

pub mod data_gen;
pub mod error;
pub mod etdrk4;
pub mod features;
pub mod format;
pub mod narmax;
pub mod reduced;
pub mod spectral;
pub mod validation;

pub use error::{Error, Result};
