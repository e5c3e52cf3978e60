//! Time grids aligned with the delay, history segments and grid paths.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Uniform grid `t_k = k * step` for `k = -lag_steps ..= n_steps` with the
/// delay an exact multiple of the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    delay: f64,
    step: f64,
    lag_steps: usize,
    n_steps: usize,
}

const ALIGN_TOL: f64 = 1e-12;

impl TimeGrid {
    pub fn new(horizon: f64, delay: f64, step: f64) -> Result<Self> {
        for (name, v) in [("horizon", horizon), ("delay", delay), ("step", step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let lag = (delay / step).round();
        if lag < 1.0 || (delay - lag * step).abs() >= ALIGN_TOL * delay {
            return Err(Error::InvalidGrid(format!(
                "delay {delay} is not an integer multiple of step {step}"
            )));
        }
        let k = (horizon / step).round();
        if k < 1.0 || (horizon - k * step).abs() >= ALIGN_TOL * horizon {
            return Err(Error::InvalidGrid(format!(
                "horizon {horizon} is not an integer multiple of step {step}"
            )));
        }
        Ok(Self {
            horizon,
            delay,
            step,
            lag_steps: lag as usize,
            n_steps: k as usize,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lag_steps(&self) -> usize {
        self.lag_steps
    }

    /// Number of forward steps `K`, so nodes run up to `t_K = horizon`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Nodes including history: `lag_steps + n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.lag_steps + self.n_steps + 1
    }

    pub fn time(&self, k: isize) -> f64 {
        k as f64 * self.step
    }

    pub fn same_nodes(&self, other: &TimeGrid) -> bool {
        self.lag_steps == other.lag_steps
            && self.n_steps == other.n_steps
            && self.step == other.step
    }
}

/// Initial datum on `[-tau, 0]` sampled at the `lag_steps + 1` history nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    dim: usize,
    values: Vec<f64>,
}

impl HistorySegment {
    /// Nodes ordered from `t = -tau` to `t = 0`.
    pub fn from_nodes(dim: usize, nodes: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "history dimension must be positive".into(),
            ));
        }
        let mut values = Vec::with_capacity(nodes.len() * dim);
        for v in nodes {
            check_dim("history node", dim, v.len())?;
            values.extend_from_slice(v);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "history contains non-finite values".into(),
            ));
        }
        Ok(Self { dim, values })
    }

    pub fn constant(grid: &TimeGrid, value: &[f64]) -> Result<Self> {
        let nodes = vec![value.to_vec(); grid.lag_steps() + 1];
        Self::from_nodes(value.len(), &nodes)
    }

    /// Samples `f(t)` at the history nodes of `grid`.
    pub fn from_fn(grid: &TimeGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let lag = grid.lag_steps() as isize;
        let nodes: Vec<Vec<f64>> = (-lag..=0).map(|k| f(grid.time(k))).collect();
        Self::from_nodes(dim, &nodes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn check(&self, grid: &TimeGrid, dim: usize) -> Result<()> {
        check_dim("history dimension", dim, self.dim)?;
        check_dim("history length", grid.lag_steps() + 1, self.len())
    }
}

/// A trajectory on every node of a grid, history included.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    dim: usize,
    data: Vec<f64>,
}

impl Path {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            data: vec![0.0; grid.n_nodes() * dim],
        }
    }

    /// Path with `history` on `[-tau, 0]` and zeros afterwards.
    pub fn with_history(grid: TimeGrid, history: &HistorySegment) -> Result<Self> {
        history.check(&grid, history.dim())?;
        let mut p = Self::zeros(grid, history.dim());
        let n = history.values.len();
        p.data[..n].copy_from_slice(&history.values);
        Ok(p)
    }

    /// Builds a path from values at every node `-lag ..= K`.
    pub fn from_nodes(grid: TimeGrid, dim: usize, nodes: &[Vec<f64>]) -> Result<Self> {
        check_dim("path nodes", grid.n_nodes(), nodes.len())?;
        let mut p = Self::zeros(grid, dim);
        for (i, v) in nodes.iter().enumerate() {
            check_dim("path node", dim, v.len())?;
            p.data[i * dim..(i + 1) * dim].copy_from_slice(v);
        }
        Ok(p)
    }

    /// Samples `f(t)` at every node.
    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let lag = grid.lag_steps() as isize;
        let nodes: Vec<Vec<f64>> = (-lag..=grid.n_steps() as isize)
            .map(|k| f(grid.time(k)))
            .collect();
        Self::from_nodes(grid, dim, &nodes)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, k: isize) -> usize {
        let i = k + self.grid.lag_steps() as isize;
        assert!(
            i >= 0 && (i as usize) < self.grid.n_nodes(),
            "node {k} outside grid [-{}, {}]",
            self.grid.lag_steps(),
            self.grid.n_steps()
        );
        i as usize * self.dim
    }

    /// State at node `k` (negative `k` addresses the history).
    #[inline]
    pub fn node(&self, k: isize) -> &[f64] {
        let o = self.offset(k);
        &self.data[o..o + self.dim]
    }

    #[inline]
    pub fn node_mut(&mut self, k: isize) -> &mut [f64] {
        let o = self.offset(k);
        &mut self.data[o..o + self.dim]
    }

    /// Forward nodes `0 ..= K`.
    pub fn forward(&self) -> impl Iterator<Item = &[f64]> {
        self.data[self.grid.lag_steps() * self.dim..].chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest Euclidean distance to `other` over forward nodes.
    pub fn sup_distance(&self, other: &Path) -> f64 {
        self.forward()
            .zip(other.forward())
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.forward().map(crate::model::norm).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Path {
        let mut p = self.clone();
        p.data.iter_mut().for_each(|v| *v *= factor);
        p
    }

    /// CSV with header `t,component_0,...` and one row per node, history
    /// included, every number at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 0..self.dim {
            let _ = write!(s, ",component_{i}");
        }
        s.push('\n');
        let lag = self.grid.lag_steps() as isize;
        for k in -lag..=self.grid.n_steps() as isize {
            let _ = write!(s, "{}", fmt17(self.grid.time(k)));
            for v in self.node(k) {
                let _ = write!(s, ",{}", fmt17(*v));
            }
            s.push('\n');
        }
        s
    }

    /// Reads a path CSV produced by [`Path::to_csv`]. Files holding only the
    /// forward nodes `0..=K` are accepted and get a zero history.
    pub fn from_csv(text: &str, grid: TimeGrid) -> Result<Path> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty path CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "bad path CSV header `{header}`"
            )));
        }
        let dim = cols.len() - 1;
        let rows: Vec<Vec<f64>> = lines
            .enumerate()
            .map(|(i, l)| {
                let row: std::result::Result<Vec<f64>, _> =
                    l.split(',').map(|c| c.trim().parse::<f64>()).collect();
                match row {
                    Ok(r) if r.len() == dim + 1 => Ok(r),
                    _ => Err(Error::InvalidInput(format!("bad path CSV row {}", i + 2))),
                }
            })
            .collect::<Result<_>>()?;
        let lag = grid.lag_steps() as isize;
        let first = if rows.len() == grid.n_nodes() {
            -lag
        } else if rows.len() == grid.n_steps() + 1 {
            0
        } else {
            return Err(Error::InvalidInput(format!(
                "path CSV has {} rows; grid needs {} (or {} without history)",
                rows.len(),
                grid.n_nodes(),
                grid.n_steps() + 1
            )));
        };
        let mut p = Path::zeros(grid, dim);
        for (i, r) in rows.iter().enumerate() {
            let k = first + i as isize;
            let t = grid.time(k);
            if (r[0] - t).abs() > 1e-9 * grid.step() {
                return Err(Error::InvalidInput(format!(
                    "path CSV row {} has t = {} but the grid node is t = {t}",
                    i + 2,
                    r[0]
                )));
            }
            p.node_mut(k).copy_from_slice(&r[1..]);
        }
        Ok(p)
    }
}

/// `{:.16e}`: 17 significant digits, round-trips every `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Named trajectories sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    paths: BTreeMap<String, Path>,
}

impl PathBundle {
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            grid,
            paths: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, path: Path) -> Result<()> {
        if !self.grid.same_nodes(path.grid()) {
            return Err(Error::InvalidInput(
                "path grid differs from bundle grid".into(),
            ));
        }
        if !path.is_finite() {
            return Err(Error::InvalidInput("bundle paths must be finite".into()));
        }
        self.paths.insert(name.into(), path);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Path> {
        self.paths.get(name)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.paths.keys().map(String::as_str)
    }

    /// CSV with header `t,<name>_<i>,...`, names in sorted order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for (name, p) in &self.paths {
            for i in 0..p.dim() {
                let _ = write!(s, ",{name}_{i}");
            }
        }
        s.push('\n');
        let lag = self.grid.lag_steps() as isize;
        for k in -lag..=self.grid.n_steps() as isize {
            let _ = write!(s, "{}", fmt17(self.grid.time(k)));
            for p in self.paths.values() {
                for v in p.node(k) {
                    let _ = write!(s, ",{}", fmt17(*v));
                }
            }
            s.push('\n');
        }
        s
    }
}
