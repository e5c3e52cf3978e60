//! Shared fixtures for the benchmarks.

use sdde_core::detsolve::solve_limit;
use sdde_core::model::builtin;
use sdde_core::{CoefficientModel, HistorySegment, Path, TimeGrid};

pub struct Fixture {
    pub model: CoefficientModel,
    pub grid: TimeGrid,
    pub xi: HistorySegment,
    pub limit: Path,
}

/// The neutral cubic-delay model on `T = 1`, `tau = 0.25` at step `dt`.
pub fn neutral_sec1(dt: f64) -> Fixture {
    let model = builtin::paper_sec1_neutral();
    let grid = TimeGrid::new(1.0, 0.25, dt).expect("aligned grid");
    let xi = HistorySegment::constant(&grid, &[1.0]).expect("scalar history");
    let limit = solve_limit(&model, &xi, &grid).expect("finite limit");
    Fixture {
        model,
        grid,
        xi,
        limit,
    }
}
