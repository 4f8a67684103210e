//! Forward simulation and inversion of the linearized stationary bipolar
//! drift-diffusion model close to equilibrium.
//!
//! The pipeline is `C -> V0 -> gamma = exp(V0) -> (u, v) -> current on the top
//! contact`. The equilibrium potential `V0` comes from a damped Newton solve of
//! the nonlinear Poisson problem; the two linearized continuity equations are
//! decoupled elliptic problems with coefficients `mu_n * gamma` and
//! `mu_p / gamma`. The inverse solver recovers a two-valued `gamma` (the
//! P-N junction) with a level-set iteration driven by adjoint gradients.
//!
//! All quantities are dimensionless: densities in units of the intrinsic
//! density, potentials in units of the thermal voltage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod elliptic;
mod error;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod redistance;

pub use error::{Error, Result};
