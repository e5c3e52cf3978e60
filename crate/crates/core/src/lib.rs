//! Small-noise asymptotics for neutral stochastic differential delay equations
//!
//! ```text
//! d[X(t) - G(X(t - tau))] = b(X(t), X(t - tau)) dt + sqrt(eps) sigma(X(t), X(t - tau)) dW(t)
//! ```
//!
//! with polynomial coefficients: the zero-noise limit, Euler simulation of
//! the perturbed and first-order processes, seeded Monte Carlo ensembles for
//! the central-limit and moderate-deviation regimes, and the rate function
//! of the skeleton equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detsolve;
mod error;
pub mod grid;
pub mod mdp;
pub mod model;
pub mod montecarlo;
mod stepper;
pub mod stochsolve;

pub use error::{Error, Result};
pub use grid::{HistorySegment, Path, PathBundle, TimeGrid};
pub use model::CoefficientModel;
pub use stepper::Scheme;

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
