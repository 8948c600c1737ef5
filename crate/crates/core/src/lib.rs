//! Radially symmetric vortex profiles for two nonlinear Schrödinger models.
//!
//! The logarithmic Gross–Pitaevskii model is solved by discretized energy
//! minimization, either with u(R) = 0 or with the plateau condition
//! u(∞) = k. The saturable optical model is solved by minimizing its action
//! at fixed beam power, and the propagation constant ω comes out as the
//! Lagrange multiplier. A shooting integrator gives an independent check of
//! the variational profiles. [`analysis`] holds the closed-form bounds and
//! certificates.
//!
//! Module map:
//!
//! - [`model`]: nonlinearities, problem variants, ω windows, plateau root k
//! - [`grid`]: radial nodes, quadrature against r dr, finite differences
//! - [`energy`]: discrete action functionals, their gradients, residuals
//! - [`solver`]: descent solvers and the shooting oracle
//! - [`analysis`]: decay fits, ω bounds, trial-function certificates

pub mod analysis;
pub mod energy;
mod error;
pub mod grid;
pub mod model;
pub mod solver;
mod tridiag;

pub use error::{Error, Result};
