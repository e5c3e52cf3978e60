use serde::Serialize;

use super::{check_ensemble, run_ensemble, EnsembleEstimate, EnsembleSpec};
use crate::detsolve::limit_path;
use crate::error::{Error, Result};
use crate::grid::{HistorySegment, Path, TimeGrid};
use crate::model::{norm, CoefficientModel};
use crate::stochsolve::{
    deviation_scale, first_order_from, sample_noise, simulate_sdde, Linearization, Scheme,
};

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::InvalidInput("the epsilon ladder is empty".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {e}"
        )));
    }
    Ok(())
}

/// `max_{k >= 0} |(a_k - b_k) / scale - c_k|`.
fn sup_scaled_gap(a: &Path, b: &Path, scale: f64, c: Option<&Path>, buf: &mut [f64]) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..=a.grid().n_steps() as isize {
        let (x, y) = (a.node(k), b.node(k));
        for i in 0..buf.len() {
            buf[i] = (x[i] - y[i]) / scale - c.map_or(0.0, |p| p.node(k)[i]);
        }
        worst = worst.max(norm(buf));
    }
    worst
}

/// `E max_k |(X^eps_k - X0_k)/sqrt(eps) - Y_k|^2` for one epsilon.
///
/// `X^eps` and `Y` share the noise of each trajectory; `X0` is the
/// zero-noise path of `scheme`.
pub fn estimate_clt_error(
    model: &CoefficientModel,
    xi: &HistorySegment,
    epsilon: f64,
    grid: &TimeGrid,
    scheme: Scheme,
    spec: &EnsembleSpec,
) -> Result<EnsembleEstimate> {
    Ok(estimate_clt_ladder(model, xi, &[epsilon], grid, scheme, spec)?.remove(0))
}

/// [`estimate_clt_error`] along a ladder, reusing each trajectory's noise
/// and first-order path for every epsilon.
pub fn estimate_clt_ladder(
    model: &CoefficientModel,
    xi: &HistorySegment,
    epsilons: &[f64],
    grid: &TimeGrid,
    scheme: Scheme,
    spec: &EnsembleSpec,
) -> Result<Vec<EnsembleEstimate>> {
    check_epsilons(epsilons)?;
    check_ensemble(spec)?;
    let x0 = limit_path(model, xi, grid, scheme)?;
    let lin = Linearization::new(model, &x0)?;
    let (n, m) = (model.state_dim(), model.noise_dim());
    let per_traj = run_ensemble(spec, |sub| {
        let w = sample_noise(grid, m, spec.seed, sub);
        let y = first_order_from(&lin, &w)?;
        let mut buf = vec![0.0; n];
        epsilons
            .iter()
            .map(|&eps| {
                let xe = simulate_sdde(model, xi, eps, grid, &w, None, scheme)?;
                Ok(sup_scaled_gap(&xe, &x0, eps.sqrt(), Some(&y), &mut buf).powi(2))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    collect_columns(&per_traj, epsilons.len(), spec)
}

fn collect_columns(
    rows: &[Vec<f64>],
    cols: usize,
    spec: &EnsembleSpec,
) -> Result<Vec<EnsembleEstimate>> {
    (0..cols)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            EnsembleEstimate::from_samples(&col, spec.seed_range())
        })
        .collect()
}

/// `E max_{k >= 0} |X^eps_k|^p`.
pub fn estimate_moment(
    model: &CoefficientModel,
    xi: &HistorySegment,
    epsilon: f64,
    p: f64,
    grid: &TimeGrid,
    scheme: Scheme,
    spec: &EnsembleSpec,
) -> Result<EnsembleEstimate> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "moment order must be >= 2, got {p}"
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    check_ensemble(spec)?;
    let m = model.noise_dim();
    let samples = run_ensemble(spec, |sub| {
        let w = sample_noise(grid, m, spec.seed, sub);
        let x = simulate_sdde(model, xi, epsilon, grid, &w, None, scheme)?;
        let sup = x.forward().map(norm).fold(0.0, f64::max);
        Ok(sup.powf(p))
    })?;
    EnsembleEstimate::from_samples(&samples, spec.seed_range())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub epsilon: f64,
    pub lambda: f64,
    pub hits: usize,
    pub n_samples: usize,
    /// `hits / n`.
    pub probability: f64,
    /// `-ln(P) / lambda^2`, or the bound `ln(n) / lambda^2` when censored.
    pub normalized_log_tail: f64,
    /// No trajectory reached the radius; the value is a lower bound.
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub gamma: f64,
    pub radius: f64,
    pub points: Vec<TailPoint>,
    pub warnings: Vec<String>,
}

/// Plain Monte Carlo estimate of `P(max_k |Z^eps_k| >= r)` with
/// `Z^eps = (X^eps - X0) / (sqrt(eps) lambda)`, `lambda = eps^-gamma`,
/// normalized as `-ln(P) / lambda^2`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_mdp_tail(
    model: &CoefficientModel,
    xi: &HistorySegment,
    grid: &TimeGrid,
    gamma: f64,
    radius: f64,
    epsilons: &[f64],
    scheme: Scheme,
    spec: &EnsembleSpec,
) -> Result<TailEstimate> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::InvalidInput(format!(
            "gamma must lie in (0, 1/2), got {gamma}"
        )));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "radius must be >= 0, got {radius}"
        )));
    }
    check_epsilons(epsilons)?;
    check_ensemble(spec)?;
    let lambdas: Vec<f64> = epsilons
        .iter()
        .map(|&e| deviation_scale(e, gamma))
        .collect();
    for (&eps, &lam) in epsilons.iter().zip(&lambdas) {
        if !(eps.sqrt() * lam < 1.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon {eps} is too large: sqrt(eps) lambda = {} must be < 1",
                eps.sqrt() * lam
            )));
        }
    }
    let x0 = limit_path(model, xi, grid, scheme)?;
    let (n, m) = (model.state_dim(), model.noise_dim());
    let sups = run_ensemble(spec, |sub| {
        let w = sample_noise(grid, m, spec.seed, sub);
        let mut buf = vec![0.0; n];
        epsilons
            .iter()
            .zip(&lambdas)
            .map(|(&eps, &lam)| {
                let xe = simulate_sdde(model, xi, eps, grid, &w, None, scheme)?;
                Ok(sup_scaled_gap(&xe, &x0, eps.sqrt() * lam, None, &mut buf))
            })
            .collect::<Result<Vec<f64>>>()
    })?;

    let total = spec.n_traj;
    let mut warnings = Vec::new();
    let points: Vec<TailPoint> = epsilons
        .iter()
        .zip(&lambdas)
        .enumerate()
        .map(|(j, (&eps, &lam))| {
            let hits = sups.iter().filter(|s| s[j] >= radius).count();
            let censored = hits == 0;
            let l2 = lam * lam;
            let normalized_log_tail = if censored {
                warnings.push(format!(
                    "epsilon {eps}: no trajectory reached radius {radius}; \
                     reporting the lower bound ln(n)/lambda^2"
                ));
                (total as f64).ln() / l2
            } else {
                (total as f64 / hits as f64).ln() / l2
            };
            TailPoint {
                epsilon: eps,
                lambda: lam,
                hits,
                n_samples: total,
                probability: hits as f64 / total as f64,
                normalized_log_tail,
                censored,
            }
        })
        .collect();
    if points.iter().all(|p| p.censored) {
        warnings.push(format!(
            "all tail estimates are censored: n_traj = {total} is too small for these epsilons"
        ));
    }
    Ok(TailEstimate {
        gamma,
        radius,
        points,
        warnings,
    })
}
