//! The small-noise limit `X0`: method of steps with explicit Euler.

use crate::error::Result;
use crate::grid::{HistorySegment, Path, TimeGrid};
use crate::model::CoefficientModel;
use crate::stepper::{integrate, Scheme};

/// Solves `d[X(t) - G(X(t-tau))] = b(X(t), X(t-tau)) dt` with `X = xi` on
/// `[-tau, 0]`.
///
/// Steps `M_{k+1} = M_k + b(X_k, X_{k-lag}) dt` and recovers
/// `X_{k+1} = M_{k+1} + G(X_{k+1-lag})`, where the delayed node is already
/// known.
pub fn solve_limit(model: &CoefficientModel, xi: &HistorySegment, grid: &TimeGrid) -> Result<Path> {
    integrate(model, xi, grid, Scheme::Explicit, None)
}

/// The zero-noise path of the chosen drift scheme: [`solve_limit`] for the
/// explicit scheme, the tamed recursion without noise otherwise.
pub fn limit_path(
    model: &CoefficientModel,
    xi: &HistorySegment,
    grid: &TimeGrid,
    scheme: Scheme,
) -> Result<Path> {
    integrate(model, xi, grid, scheme, None)
}
