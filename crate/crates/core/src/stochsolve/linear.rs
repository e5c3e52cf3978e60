//! Linearization of the dynamics around the limit path.
//!
//! Both the first-order process `Y` and the skeleton `Z^h` solve
//!
//! ```text
//! d[U(t) - DG(X0(t-tau)) U(t-tau)] = [Dxb U(t) + Dyb U(t-tau)] dt + sigma(X0(t), X0(t-tau)) du(t)
//! ```
//!
//! with `U = 0` on `[-tau, 0]`; they differ only in the forcing `du`
//! (`dW` for `Y`, `hdot dt` for `Z^h`). The coefficient matrices are frozen
//! along `X0` once and shared by every trajectory.

use crate::error::{check_dim, Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::model::{Arg, CoefficientModel};

#[derive(Debug, Clone)]
pub struct Linearization {
    grid: TimeGrid,
    n: usize,
    m: usize,
    /// `Dxb(X0_k, X0_{k-lag})`, row-major `n x n`, k = 0..=K.
    jac_x: Vec<f64>,
    /// `Dyb(X0_k, X0_{k-lag})`.
    jac_y: Vec<f64>,
    /// `sigma(X0_k, X0_{k-lag})`, row-major `n x m`.
    sigma: Vec<f64>,
    /// `DG(X0_{k-lag})`.
    neutral: Vec<f64>,
}

impl Linearization {
    pub fn new(model: &CoefficientModel, limit: &Path) -> Result<Self> {
        let n = model.state_dim();
        let m = model.noise_dim();
        check_dim("limit path dimension", n, limit.dim())?;
        if !limit.is_finite() {
            return Err(Error::InvalidInput("limit path is not finite".into()));
        }
        let grid = *limit.grid();
        let lag = grid.lag_steps() as isize;
        let nodes = grid.n_steps() + 1;
        let mut lin = Self {
            grid,
            n,
            m,
            jac_x: vec![0.0; nodes * n * n],
            jac_y: vec![0.0; nodes * n * n],
            sigma: vec![0.0; nodes * n * m],
            neutral: vec![0.0; nodes * n * n],
        };
        let nn = n * n;
        for k in 0..nodes {
            let (x, y) = (limit.node(k as isize), limit.node(k as isize - lag));
            let drift = model.drift();
            drift.jacobian_into(Arg::X, x, y, &mut lin.jac_x[k * nn..(k + 1) * nn]);
            drift.jacobian_into(Arg::Y, x, y, &mut lin.jac_y[k * nn..(k + 1) * nn]);
            model.diffusion_into(x, y, &mut lin.sigma[k * n * m..(k + 1) * n * m]);
            model.neutral_jacobian_into(y, &mut lin.neutral[k * nn..(k + 1) * nn]);
        }
        Ok(lin)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn noise_dim(&self) -> usize {
        self.m
    }

    /// `sigma(X0_k, X0_{k-lag})`, row-major `n x m`.
    pub fn sigma_at(&self, k: usize) -> &[f64] {
        let nm = self.n * self.m;
        &self.sigma[k * nm..(k + 1) * nm]
    }

    pub(crate) fn jac_x_at(&self, k: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.jac_x[k * nn..(k + 1) * nn]
    }

    pub(crate) fn jac_y_at(&self, k: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.jac_y[k * nn..(k + 1) * nn]
    }

    pub(crate) fn neutral_at(&self, k: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.neutral[k * nn..(k + 1) * nn]
    }

    /// Steps the linear recursion; `forcing(k, du)` fills the `m`-vector
    /// forcing increment of step `k`.
    pub fn solve(&self, mut forcing: impl FnMut(usize, &mut [f64])) -> Result<Path> {
        let (n, m) = (self.n, self.m);
        let lag = self.grid.lag_steps() as isize;
        let dt = self.grid.step();
        let mut u = Path::zeros(self.grid, n);
        // N_0 = U_0 - DG U_{-lag} = 0 on the zero initial segment.
        let mut diff_var = vec![0.0; n];
        let mut du = vec![0.0; m];
        let mut lagged = vec![0.0; n];
        for k in 0..self.grid.n_steps() {
            let kk = k as isize;
            let (a, b, s) = (self.jac_x_at(k), self.jac_y_at(k), self.sigma_at(k));
            forcing(k, &mut du);
            {
                let (cur, del) = (u.node(kk), u.node(kk - lag));
                for i in 0..n {
                    let drift: f64 = (0..n)
                        .map(|j| a[i * n + j] * cur[j] + b[i * n + j] * del[j])
                        .sum();
                    diff_var[i] += drift * dt;
                    diff_var[i] += (0..m).map(|j| s[i * m + j] * du[j]).sum::<f64>();
                }
            }
            let next = kk + 1;
            let d = self.neutral_at(k + 1);
            lagged.copy_from_slice(u.node(next - lag));
            let out = u.node_mut(next);
            for i in 0..n {
                out[i] = diff_var[i] + (0..n).map(|j| d[i * n + j] * lagged[j]).sum::<f64>();
            }
            if !out.iter().all(|v| v.is_finite()) {
                return Err(Error::Explosion {
                    node: k + 1,
                    time: self.grid.time(next),
                    hint: "the linearized recursion overflowed",
                });
            }
        }
        Ok(u)
    }
}
