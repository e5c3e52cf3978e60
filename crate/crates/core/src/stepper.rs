//! The Euler recursion on the difference variable `M = X - G(X(. - tau))`
//! shared by the deterministic and stochastic solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{HistorySegment, Path, TimeGrid};
use crate::model::CoefficientModel;

/// Drift discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `b * dt`.
    Explicit,
    /// `b * dt / (1 + dt * |b|)`.
    Tamed,
}

impl Scheme {
    /// Tamed for any drift monomial of total degree above one.
    pub fn default_for(model: &CoefficientModel) -> Scheme {
        if model.has_superlinear_drift() {
            Scheme::Tamed
        } else {
            Scheme::Explicit
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Explicit => "explicit",
            Scheme::Tamed => "tamed",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "tamed" => Ok(Scheme::Tamed),
            other => Err(Error::InvalidInput(format!(
                "unknown scheme `{other}` (expected explicit or tamed)"
            ))),
        }
    }
}

/// Per-step noise forcing: the `m`-vector `w_k` multiplying `sigma(X_k, X_{k-lag})`.
pub(crate) trait Forcing {
    fn increment(&self, k: usize, out: &mut [f64]);
}

pub(crate) fn integrate(
    model: &CoefficientModel,
    xi: &HistorySegment,
    grid: &TimeGrid,
    scheme: Scheme,
    forcing: Option<&dyn Forcing>,
) -> Result<Path> {
    let n = model.state_dim();
    let m = model.noise_dim();
    xi.check(grid, n)?;
    let lag = grid.lag_steps() as isize;
    let dt = grid.step();
    let mut x = Path::with_history(*grid, xi)?;

    let mut diff_var = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut sigma = vec![0.0; n * m];
    let mut w = vec![0.0; m];

    model.neutral_into(x.node(-lag), &mut g);
    for (mi, (xi0, gi)) in diff_var.iter_mut().zip(x.node(0).iter().zip(&g)) {
        *mi = xi0 - gi;
    }

    for k in 0..grid.n_steps() {
        let kk = k as isize;
        {
            let (cur, del) = (x.node(kk), x.node(kk - lag));
            model.drift_into(cur, del, &mut b);
            match scheme {
                Scheme::Explicit => {
                    for (mi, bi) in diff_var.iter_mut().zip(&b) {
                        *mi += bi * dt;
                    }
                }
                Scheme::Tamed => {
                    let scale = 1.0 + dt * crate::model::norm(&b);
                    for (mi, bi) in diff_var.iter_mut().zip(&b) {
                        *mi += bi * dt / scale;
                    }
                }
            }
            if let Some(f) = forcing {
                model.diffusion_into(cur, del, &mut sigma);
                f.increment(k, &mut w);
                for (i, mi) in diff_var.iter_mut().enumerate() {
                    let row = &sigma[i * m..(i + 1) * m];
                    *mi += row.iter().zip(&w).map(|(s, wj)| s * wj).sum::<f64>();
                }
            }
        }
        let next = kk + 1;
        model.neutral_into(x.node(next - lag), &mut g);
        let out = x.node_mut(next);
        for ((o, mi), gi) in out.iter_mut().zip(&diff_var).zip(&g) {
            *o = mi + gi;
        }
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::Explosion {
                node: k + 1,
                time: grid.time(next),
                hint: match scheme {
                    Scheme::Explicit => {
                        "the explicit scheme diverged; try the tamed scheme or a smaller step"
                    }
                    Scheme::Tamed => "the tamed scheme diverged; try a smaller step",
                },
            });
        }
    }
    Ok(x)
}
