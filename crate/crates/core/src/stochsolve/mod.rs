//! Perturbed, controlled and first-order processes on the grid.

mod control;
mod linear;
mod noise;

pub use control::ControlPath;
pub use linear::Linearization;
pub use noise::{sample_noise, NoisePath};

pub use crate::stepper::Scheme;

use crate::error::{check_dim, Error, Result};
use crate::grid::{HistorySegment, Path, TimeGrid};
use crate::model::CoefficientModel;
use crate::stepper::{integrate, Forcing};

/// Deviation scale `lambda(eps) = eps^-gamma`.
pub fn deviation_scale(epsilon: f64, gamma: f64) -> f64 {
    epsilon.powf(-gamma)
}

struct NoiseForcing<'a> {
    sqrt_eps: f64,
    noise: &'a NoisePath,
    control: Option<(&'a ControlPath, f64)>,
    dt: f64,
}

impl Forcing for NoiseForcing<'_> {
    #[inline]
    fn increment(&self, k: usize, out: &mut [f64]) {
        let dw = self.noise.increment(k);
        match self.control {
            None => {
                for (o, d) in out.iter_mut().zip(dw) {
                    *o = self.sqrt_eps * d;
                }
            }
            Some((c, lambda)) => {
                for ((o, d), v) in out.iter_mut().zip(dw).zip(c.hdot(k)) {
                    *o = self.sqrt_eps * (d + lambda * v * self.dt);
                }
            }
        }
    }
}

/// Simulates the perturbed equation, optionally with the extra drift
/// `sqrt(eps) lambda sigma vdot` of a control `v`:
///
/// ```text
/// M_{k+1} = M_k + b_k dt + sqrt(eps) sigma_k (dW_k + lambda vdot_k dt)
/// ```
///
/// on `M_k = X_k - G(X_{k-lag})`. The tamed scheme replaces `b_k dt` by
/// `b_k dt / (1 + dt |b_k|)`. With `epsilon == 0` the explicit scheme
/// reproduces [`crate::detsolve::solve_limit`] bit for bit.
pub fn simulate_sdde(
    model: &CoefficientModel,
    xi: &HistorySegment,
    epsilon: f64,
    grid: &TimeGrid,
    noise: &NoisePath,
    control: Option<(&ControlPath, f64)>,
    scheme: Scheme,
) -> Result<Path> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if !noise.grid().same_nodes(grid) {
        return Err(Error::InvalidInput(
            "noise grid differs from simulation grid".into(),
        ));
    }
    check_dim("noise dimension", model.noise_dim(), noise.dim())?;
    if let Some((c, lambda)) = control {
        if !c.grid().same_nodes(grid) {
            return Err(Error::InvalidInput(
                "control grid differs from simulation grid".into(),
            ));
        }
        check_dim("control dimension", model.noise_dim(), c.dim())?;
        if !lambda.is_finite() {
            return Err(Error::InvalidInput("lambda must be finite".into()));
        }
    }
    let sqrt_eps = epsilon.sqrt();
    if sqrt_eps == 0.0 {
        return integrate(model, xi, grid, scheme, None);
    }
    let forcing = NoiseForcing {
        sqrt_eps,
        noise,
        control,
        dt: grid.step(),
    };
    integrate(model, xi, grid, scheme, Some(&forcing))
}

/// First-order correction `Y`: the linearized equation around `limit_path`
/// driven by `sigma(X0) dW`, with `Y = 0` on `[-tau, 0]`.
pub fn simulate_first_order(
    model: &CoefficientModel,
    limit_path: &Path,
    grid: &TimeGrid,
    noise: &NoisePath,
) -> Result<Path> {
    if !limit_path.grid().same_nodes(grid) || !noise.grid().same_nodes(grid) {
        return Err(Error::InvalidInput(
            "limit path, noise and grid must agree".into(),
        ));
    }
    check_dim("noise dimension", model.noise_dim(), noise.dim())?;
    let lin = Linearization::new(model, limit_path)?;
    first_order_from(&lin, noise)
}

/// [`simulate_first_order`] with a precomputed linearization.
pub fn first_order_from(lin: &Linearization, noise: &NoisePath) -> Result<Path> {
    check_dim("noise dimension", lin.noise_dim(), noise.dim())?;
    lin.solve(|k, du| du.copy_from_slice(noise.increment(k)))
}
