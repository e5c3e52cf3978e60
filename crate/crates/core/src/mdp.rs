//! Skeleton dynamics and the moderate-deviation rate function.
//!
//! The skeleton `Z^h` solves the linearized equation around `X0` forced by
//! `sigma(X0) hdot dt`. Pinning `Z` to a target `f` turns the discretized
//! constraint into one linear system per step, `sigma_k u_k = r_k` with
//! `u_k = hdot_k dt`, so the infimum of the cost over `{h : Z^h = f}` is
//! attained by the stepwise minimum-norm solution.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::model::CoefficientModel;
use crate::stochsolve::{ControlPath, Linearization};

/// Relative singular-value cutoff and absolute range-residual tolerance.
pub const DEFAULT_RATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSolution {
    pub grid: TimeGrid,
    pub z: Path,
    pub control: ControlPath,
    pub feasible: bool,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateDiagnostics {
    /// Norm of the part of each step's residual outside the range of sigma.
    pub per_step_residuals: Vec<f64>,
    pub first_infeasible_step: Option<usize>,
    /// Steps at which sigma lost rank under the cutoff.
    pub rank_deficient_steps: Vec<usize>,
    /// Absolute singular-value cutoff applied (`tol * max_k |sigma_k|_2`).
    pub singular_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateValue {
    /// `+inf` when the target is not attainable.
    pub value: f64,
    pub argmin_control: Option<ControlPath>,
    pub diagnostics: RateDiagnostics,
}

impl RateValue {
    pub fn is_feasible(&self) -> bool {
        self.value.is_finite()
    }
}

/// `L_T(h) = 1/2 int_0^T |hdot|^2`.
pub fn cost(h: &ControlPath) -> f64 {
    h.cost()
}

/// Membership in the level set `S_N = {h : L_T(h) <= N}`.
pub fn in_level_set(h: &ControlPath, level: f64) -> bool {
    cost(h) <= level
}

/// `h -> Z^h`.
pub fn forward_map(
    model: &CoefficientModel,
    limit_path: &Path,
    h: &ControlPath,
) -> Result<SkeletonSolution> {
    let lin = Linearization::new(model, limit_path)?;
    forward_map_with(&lin, h)
}

/// [`forward_map`] with a precomputed linearization.
pub fn forward_map_with(lin: &Linearization, h: &ControlPath) -> Result<SkeletonSolution> {
    check_dim("control dimension", lin.noise_dim(), h.dim())?;
    if !h.grid().same_nodes(lin.grid()) {
        return Err(Error::InvalidInput(
            "control grid differs from limit path grid".into(),
        ));
    }
    let dt = lin.grid().step();
    let z = lin.solve(|k, du| {
        for (d, v) in du.iter_mut().zip(h.hdot(k)) {
            *d = v * dt;
        }
    })?;
    Ok(SkeletonSolution {
        grid: *lin.grid(),
        z,
        control: h.clone(),
        feasible: true,
        residual_norm: 0.0,
    })
}

fn residual_at(lin: &Linearization, f: &Path, k: usize) -> Vec<f64> {
    let n = lin.state_dim();
    let lag = lin.grid().lag_steps() as isize;
    let dt = lin.grid().step();
    let kk = k as isize;
    let diff_var = |j: isize| -> Vec<f64> {
        let d = lin.neutral_at(j as usize);
        let (cur, del) = (f.node(j), f.node(j - lag));
        (0..n)
            .map(|i| cur[i] - (0..n).map(|l| d[i * n + l] * del[l]).sum::<f64>())
            .collect()
    };
    let (now, next) = (diff_var(kk), diff_var(kk + 1));
    let (a, b) = (lin.jac_x_at(k), lin.jac_y_at(k));
    let (cur, del) = (f.node(kk), f.node(kk - lag));
    (0..n)
        .map(|i| {
            let drift: f64 = (0..n)
                .map(|j| a[i * n + j] * cur[j] + b[i * n + j] * del[j])
                .sum();
            next[i] - now[i] - drift * dt
        })
        .collect()
}

fn spectral_norm(s: &[f64], n: usize, m: usize) -> f64 {
    if n == 1 || m == 1 {
        return s.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    DMatrix::from_row_slice(n, m, s).singular_values().max()
}

/// Minimum-norm `u` with `sigma u ~ r`; returns `(u, |r - sigma u|, rank_deficient)`.
fn min_norm_solve(s: &[f64], n: usize, m: usize, r: &[f64], cutoff: f64) -> (Vec<f64>, f64, bool) {
    let (u, deficient) = if n == 1 && m == 1 {
        if s[0].abs() > cutoff {
            (vec![r[0] / s[0]], false)
        } else {
            (vec![0.0], true)
        }
    } else {
        let svd = DMatrix::from_row_slice(n, m, s).svd(true, true);
        let (uu, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
        let rv = DVector::from_column_slice(r);
        let mut sol = DVector::zeros(m);
        let mut rank = 0;
        for (i, &sv) in svd.singular_values.iter().enumerate() {
            if sv > cutoff {
                rank += 1;
                let coef = uu.column(i).dot(&rv) / sv;
                sol += vt.row(i).transpose() * coef;
            }
        }
        (sol.iter().copied().collect(), rank < n.min(m))
    };
    let resid: f64 = (0..n)
        .map(|i| {
            let e = r[i] - (0..m).map(|j| s[i * m + j] * u[j]).sum::<f64>();
            e * e
        })
        .sum::<f64>()
        .sqrt();
    (u, resid, deficient)
}

/// `I(f) = inf { L_T(h) : Z^h = f }` by stepwise minimum-norm inversion.
pub fn rate_function(
    model: &CoefficientModel,
    limit_path: &Path,
    target: &Path,
    tol: f64,
) -> Result<RateValue> {
    let lin = Linearization::new(model, limit_path)?;
    rate_function_with(&lin, target, tol)
}

pub fn rate_function_with(lin: &Linearization, target: &Path, tol: f64) -> Result<RateValue> {
    let (n, m) = (lin.state_dim(), lin.noise_dim());
    check_dim("target dimension", n, target.dim())?;
    if !target.grid().same_nodes(lin.grid()) {
        return Err(Error::InvalidInput(
            "target is not aligned with the limit path grid".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if !target.is_finite() {
        return Err(Error::InvalidInput(
            "target contains non-finite values".into(),
        ));
    }
    let lag = lin.grid().lag_steps() as isize;
    if (-lag..=0).any(|k| target.node(k).iter().any(|v| *v != 0.0)) {
        return Err(Error::InvalidInput(
            "target must vanish on the initial segment [-tau, 0]".into(),
        ));
    }
    let steps = lin.grid().n_steps();
    let dt = lin.grid().step();
    let sigma_max = (0..steps)
        .map(|k| spectral_norm(lin.sigma_at(k), n, m))
        .fold(0.0, f64::max);
    let cutoff = tol * sigma_max;

    let mut hdot = Vec::with_capacity(steps * m);
    let mut diag = RateDiagnostics {
        per_step_residuals: Vec::with_capacity(steps),
        first_infeasible_step: None,
        rank_deficient_steps: Vec::new(),
        singular_cutoff: cutoff,
    };
    for k in 0..steps {
        let r = residual_at(lin, target, k);
        let (u, resid, deficient) = min_norm_solve(lin.sigma_at(k), n, m, &r, cutoff);
        if deficient {
            diag.rank_deficient_steps.push(k);
        }
        if !(resid <= tol) && diag.first_infeasible_step.is_none() {
            diag.first_infeasible_step = Some(k);
        }
        diag.per_step_residuals.push(resid);
        hdot.extend(u.into_iter().map(|v| v / dt));
    }
    if diag.first_infeasible_step.is_some() {
        return Ok(RateValue {
            value: f64::INFINITY,
            argmin_control: None,
            diagnostics: diag,
        });
    }
    let control = ControlPath::from_values(lin.grid(), m, hdot)?;
    Ok(RateValue {
        value: control.cost(),
        argmin_control: Some(control),
        diagnostics: diag,
    })
}

/// Max-node distance between `Z^{argmin}` and the target.
pub fn verify_roundtrip(
    model: &CoefficientModel,
    limit_path: &Path,
    target: &Path,
    tol: f64,
) -> Result<f64> {
    let lin = Linearization::new(model, limit_path)?;
    let rate = rate_function_with(&lin, target, tol)?;
    match &rate.argmin_control {
        Some(h) => Ok(forward_map_with(&lin, h)?.z.sup_distance(target)),
        None => {
            let step = rate.diagnostics.first_infeasible_step.unwrap_or(0);
            Err(Error::Infeasible {
                step,
                residual: rate.diagnostics.per_step_residuals[step],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detsolve::solve_limit;
    use crate::grid::HistorySegment;
    use crate::model::{builtin, Monomial, PolynomialMap};
    use crate::stochsolve::{first_order_from, sample_noise, NoisePath};

    fn constant_sigma(s: &[f64]) -> CoefficientModel {
        let terms = s
            .iter()
            .enumerate()
            .map(|(j, &v)| Monomial::new(j, vec![0], vec![0], v))
            .collect();
        CoefficientModel::new(
            PolynomialMap::zero(1, 1, 1),
            PolynomialMap::new(s.len(), 1, 1, terms).unwrap(),
            PolynomialMap::zero(1, 0, 1),
        )
        .unwrap()
    }

    fn setup(model: &CoefficientModel, grid: TimeGrid, xi: f64) -> Path {
        solve_limit(
            model,
            &HistorySegment::constant(&grid, &[xi]).unwrap(),
            &grid,
        )
        .unwrap()
    }

    fn ramp(grid: TimeGrid, slope: f64) -> Path {
        Path::from_fn(grid, 1, |t| vec![slope * t.max(0.0)]).unwrap()
    }

    #[test]
    fn cost_examples() {
        let g = TimeGrid::new(2.0, 0.5, 0.01).unwrap();
        assert_eq!(cost(&ControlPath::zeros(&g, 1)), 0.0);
        let c = ControlPath::from_fn(&g, 1, |_| vec![3.0]).unwrap();
        assert!((cost(&c) - 9.0 * 2.0 / 2.0).abs() < 1e-12);
        let half =
            ControlPath::from_fn(&g, 1, |t| vec![if t < 1.0 - 1e-9 { 1.0 } else { 0.0 }]).unwrap();
        assert!((cost(&half) - 0.5).abs() < 1e-12);
        assert!(in_level_set(&half, 0.5 + 1e-12));
        assert!(!in_level_set(&c, 8.0));
    }

    #[test]
    fn zero_control_gives_zero_skeleton() {
        let g = TimeGrid::new(1.0, 0.25, 1e-3).unwrap();
        let m = builtin::paper_sec1_neutral();
        let x0 = setup(&m, g, 1.0);
        let z = forward_map(&m, &x0, &ControlPath::zeros(&g, 1)).unwrap();
        assert!(z.z.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_sigma_skeleton_telescopes() {
        let g = TimeGrid::new(1.0, 0.25, 1e-3).unwrap();
        let m = constant_sigma(&[1.7]);
        let x0 = setup(&m, g, 0.0);
        let h = ControlPath::from_fn(&g, 1, |t| vec![(5.0 * t).cos()]).unwrap();
        let z = forward_map(&m, &x0, &h).unwrap();
        for k in 0..=g.n_steps() {
            let expected = 1.7 * h.integral(k)[0];
            assert!((z.z.node(k as isize)[0] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_target_costs_nothing() {
        let g = TimeGrid::new(1.0, 0.25, 1e-3).unwrap();
        let m = builtin::paper_sec1();
        let x0 = setup(&m, g, 1.0);
        let r = rate_function(&m, &x0, &Path::zeros(g, 1), DEFAULT_RATE_TOLERANCE).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.argmin_control.unwrap().is_zero());
        assert_eq!(
            verify_roundtrip(&m, &x0, &Path::zeros(g, 1), 1e-10).unwrap(),
            0.0
        );
    }

    #[test]
    fn closed_form_for_constant_sigma_and_ramp() {
        for (s, gamma, t_end) in [(1.0, 1.0, 1.0), (2.0, 3.0, 1.0), (0.5, 1.0, 2.0)] {
            let g = TimeGrid::new(t_end, 0.25, 1e-3).unwrap();
            let m = constant_sigma(&[s]);
            let x0 = setup(&m, g, 0.0);
            let f = ramp(g, gamma);
            let r = rate_function(&m, &x0, &f, DEFAULT_RATE_TOLERANCE).unwrap();
            let exact = gamma * gamma * t_end / (2.0 * s * s);
            assert!(
                ((r.value - exact) / exact).abs() < 1e-9,
                "{} vs {exact}",
                r.value
            );
            let h = r.argmin_control.unwrap();
            assert!(h.values().iter().all(|v| (v - gamma / s).abs() < 1e-9));
            let d = verify_roundtrip(&m, &x0, &f, DEFAULT_RATE_TOLERANCE).unwrap();
            assert!(d <= 1e-12, "roundtrip {d}");
        }
    }

    #[test]
    fn zero_sigma_is_infeasible() {
        let g = TimeGrid::new(1.0, 0.25, 1e-2).unwrap();
        let m = constant_sigma(&[0.0]);
        let x0 = setup(&m, g, 0.0);
        // f vanishes up to t = 0.5, then grows.
        let f = Path::from_fn(g, 1, |t| vec![(t - 0.5).max(0.0)]).unwrap();
        let r = rate_function(&m, &x0, &f, DEFAULT_RATE_TOLERANCE).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.diagnostics.first_infeasible_step, Some(50));
        match verify_roundtrip(&m, &x0, &f, DEFAULT_RATE_TOLERANCE) {
            Err(Error::Infeasible { step: 50, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn targets_must_vanish_initially_and_align() {
        let g = TimeGrid::new(1.0, 0.25, 1e-2).unwrap();
        let m = constant_sigma(&[1.0]);
        let x0 = setup(&m, g, 0.0);
        let shifted = Path::from_fn(g, 1, |t| vec![1.0 + t]).unwrap();
        assert!(rate_function(&m, &x0, &shifted, 1e-10).is_err());
        let other = TimeGrid::new(1.0, 0.25, 5e-3).unwrap();
        assert!(rate_function(&m, &x0, &ramp(other, 1.0), 1e-10).is_err());
    }

    #[test]
    fn sec1_roundtrip_with_nonvanishing_sigma() {
        let g = TimeGrid::new(1.0, 0.25, 1e-3).unwrap();
        let m = builtin::paper_sec1();
        let x0 = setup(&m, g, 1.0);
        let f = Path::from_fn(g, 1, |t| vec![0.1 * t.max(0.0).powi(2)]).unwrap();
        let tol = DEFAULT_RATE_TOLERANCE;
        let d = verify_roundtrip(&m, &x0, &f, tol).unwrap();
        assert!(d <= 10.0 * tol, "roundtrip {d}");
    }

    #[test]
    fn minimum_norm_control_is_orthogonal_to_kernel() {
        let g = TimeGrid::new(1.0, 0.25, 1e-3).unwrap();
        let s = [0.6, -1.1];
        let m = constant_sigma(&s);
        let x0 = setup(&m, g, 0.0);
        let f = Path::from_fn(g, 1, |t| vec![t.max(0.0).sin()]).unwrap();
        let r = rate_function(&m, &x0, &f, DEFAULT_RATE_TOLERANCE).unwrap();
        let h = r.argmin_control.unwrap();
        let kernel = [1.1, 0.6];
        for k in 0..g.n_steps() {
            let v = h.hdot(k);
            assert!((v[0] * kernel[0] + v[1] * kernel[1]).abs() < 1e-10);
        }
        // adding a kernel component keeps the image, and only raises the cost.
        let bumped =
            ControlPath::from_fn(&g, 2, |_| vec![0.05 * kernel[0], 0.05 * kernel[1]]).unwrap();
        let alt = h.add(&bumped).unwrap();
        let z = forward_map(&m, &x0, &alt).unwrap().z;
        assert!(z.sup_distance(&f) < 1e-10);
        assert!(alt.cost() > r.value);
    }

    #[test]
    fn skeleton_and_first_order_share_their_recursion() {
        let g = TimeGrid::new(1.0, 0.25, 1e-3).unwrap();
        let m = builtin::paper_sec1_neutral();
        let x0 = setup(&m, g, 0.4);
        let lin = Linearization::new(&m, &x0).unwrap();
        let w = sample_noise(&g, 1, 10, 3);
        let dt = g.step();
        let h = ControlPath::from_values(&g, 1, w.increments().iter().map(|d| d / dt).collect())
            .unwrap();
        let as_noise =
            NoisePath::from_increments(&g, 1, h.values().iter().map(|v| v * dt).collect()).unwrap();
        let z = forward_map_with(&lin, &h).unwrap().z;
        let y = first_order_from(&lin, &as_noise).unwrap();
        assert_eq!(z, y);
    }

    #[test]
    fn rank_drop_along_path_is_reported() {
        // sigma = 4y^2 with the history passing through zero.
        let g = TimeGrid::new(1.0, 0.5, 1e-2).unwrap();
        let m = builtin::paper_sec1();
        let xi = HistorySegment::from_fn(&g, 1, |t| vec![t + 0.25]).unwrap();
        let x0 = solve_limit(&m, &xi, &g).unwrap();
        let r = rate_function(&m, &x0, &ramp(g, 1.0), DEFAULT_RATE_TOLERANCE).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.diagnostics.rank_deficient_steps, vec![25]);
        assert_eq!(r.diagnostics.first_infeasible_step, Some(25));
    }
}
