use std::fmt::Write as _;

use crate::error::{check_dim, Error, Result};
use crate::grid::{fmt17, TimeGrid};

/// A Cameron-Martin path `h(t) = int_0^t hdot(s) ds` with `hdot` constant
/// on each grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    grid: TimeGrid,
    dim: usize,
    hdot: Vec<f64>,
}

impl ControlPath {
    pub fn zeros(grid: &TimeGrid, m: usize) -> Self {
        Self {
            grid: *grid,
            dim: m,
            hdot: vec![0.0; grid.n_steps() * m],
        }
    }

    /// `hdot` values step-major, `n_steps * m` of them.
    pub fn from_values(grid: &TimeGrid, m: usize, hdot: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput(
                "control dimension must be positive".into(),
            ));
        }
        check_dim("control values", grid.n_steps() * m, hdot.len())?;
        if hdot.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "control contains non-finite values".into(),
            ));
        }
        Ok(Self {
            grid: *grid,
            dim: m,
            hdot,
        })
    }

    /// Samples `hdot` at the left end `t_k` of each step.
    pub fn from_fn(grid: &TimeGrid, m: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut hdot = Vec::with_capacity(grid.n_steps() * m);
        for k in 0..grid.n_steps() {
            let v = f(grid.time(k as isize));
            check_dim("control value", m, v.len())?;
            hdot.extend(v);
        }
        Self::from_values(grid, m, hdot)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn hdot(&self, k: usize) -> &[f64] {
        &self.hdot[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.hdot
    }

    pub fn is_zero(&self) -> bool {
        self.hdot.iter().all(|v| *v == 0.0)
    }

    /// `h(t_k) = sum_{j<k} hdot_j dt`.
    pub fn integral(&self, k: usize) -> Vec<f64> {
        let dt = self.grid.step();
        let mut acc = vec![0.0; self.dim];
        for j in 0..k {
            for (a, v) in acc.iter_mut().zip(self.hdot(j)) {
                *a += v * dt;
            }
        }
        acc
    }

    /// `L_T(h) = 1/2 sum_k |hdot_k|^2 dt`.
    pub fn cost(&self) -> f64 {
        0.5 * self.hdot.iter().map(|v| v * v).sum::<f64>() * self.grid.step()
    }

    pub fn scaled(&self, factor: f64) -> ControlPath {
        let mut c = self.clone();
        c.hdot.iter_mut().for_each(|v| *v *= factor);
        c
    }

    pub fn add(&self, other: &ControlPath) -> Result<ControlPath> {
        check_dim("control dimension", self.dim, other.dim)?;
        if !self.grid.same_nodes(&other.grid) {
            return Err(Error::InvalidInput(
                "controls live on different grids".into(),
            ));
        }
        let hdot = self
            .hdot
            .iter()
            .zip(&other.hdot)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_values(&self.grid, self.dim, hdot)
    }

    /// CSV `t,hdot_0,...` with one row per step, keyed by the step's left end.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 0..self.dim {
            let _ = write!(s, ",hdot_{i}");
        }
        s.push('\n');
        for k in 0..self.grid.n_steps() {
            let _ = write!(s, "{}", fmt17(self.grid.time(k as isize)));
            for v in self.hdot(k) {
                let _ = write!(s, ",{}", fmt17(*v));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_and_cost() {
        let g = TimeGrid::new(1.0, 0.25, 0.25).unwrap();
        let c = ControlPath::from_values(&g, 1, vec![1.0, 2.0, 0.0, -1.0]).unwrap();
        assert_eq!(c.integral(0), vec![0.0]);
        assert_eq!(c.integral(2), vec![0.75]);
        assert_eq!(c.cost(), 0.5 * 6.0 * 0.25);
        assert!(ControlPath::from_values(&g, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn csv_has_one_row_per_step() {
        let g = TimeGrid::new(1.0, 0.5, 0.5).unwrap();
        let c = ControlPath::from_fn(&g, 2, |t| vec![t, -t]).unwrap();
        let csv = c.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("t,hdot_0,hdot_1\n"));
    }
}
