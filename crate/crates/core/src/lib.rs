//! Numerical laboratory for mean-field two- and three-layer networks trained
//! with the one-pass stochastic heavy ball (SHB) method.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: parameterisations, forward passes and width-scaled gradients.
//! - [`datagen`]: bounded synthetic data, initialisers and Monte Carlo pool risk.
//! - [`dynamics`]: SHB, exact-gradient heavy ball (HB), the continuous particle
//!   dynamics (PD) and the noisy Euler–Maruyama variant.
//! - [`coupling`]: shared-initialisation couplings, the large-width proxy of the
//!   mean-field limit and the trajectory distances `D_T`.
//! - [`transport`]: Wasserstein-2 between uniform empirical measures.
//! - [`landscape`]: dropout networks, dropout error and connecting paths.
//! - [`stats`]: log-log rate fits.
//! - [`harness`]: configuration, experiment orchestration, fits and reports.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod datagen;
pub mod dynamics;
mod error;
pub mod harness;
pub mod landscape;
pub mod model;
pub mod numeric;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use model::{Activation, Loss, Network, Objective, Params2L, Params3L};
