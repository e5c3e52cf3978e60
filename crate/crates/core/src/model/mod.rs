//! Coefficient models: drift `b(x, y)`, diffusion `sigma(x, y)` and the
//! neutral term `G(y)`, where `y` is the state one delay back.

mod assumptions;
pub mod builtin;
mod file;
mod poly;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub use assumptions::{
    check_assumptions, dissipativity_sides, AssumptionCheck, AssumptionReport, CloudSpec, Verdict,
    Witness, DEFAULT_TOLERANCE,
};
pub use file::{parse_model, write_model};
pub use poly::{Arg, Monomial, PolynomialMap};

/// Constants of the growth function `V(x,y) = K(1 + |x|^q + |y|^q)` and the
/// Lipschitz constants `L` (coefficients in `x`) and `L0` (drift gradient in `x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub growth_k: f64,
    pub growth_q: f64,
    pub lipschitz_l: f64,
    pub lipschitz_l0: f64,
}

impl Default for GrowthConstants {
    fn default() -> Self {
        Self {
            growth_k: 1.0,
            growth_q: 1.0,
            lipschitz_l: 1.0,
            lipschitz_l0: 1.0,
        }
    }
}

/// Constants of the polynomial Lyapunov (dissipativity) inequality
///
/// ```text
/// p|x-G(y)|^(p-2) (<x-G(y), b(x,y)> + (p-1)/2 |sigma(x,y)|_HS^2)
///     <= a1 - a2|x|^p + a3|y|^p - a4|x|^q + a5|y|^q
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipativity {
    pub p: f64,
    pub q: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
}

impl Dissipativity {
    pub fn validate(&self) -> Result<()> {
        let d = self;
        let fields = [d.p, d.q, d.a1, d.a2, d.a3, d.a4, d.a5];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite dissipativity constant".into(),
            ));
        }
        if !(d.q > d.p && d.p >= 2.0) {
            return Err(Error::InvalidInput(format!(
                "dissipativity needs q > p >= 2 (got p = {}, q = {})",
                d.p, d.q
            )));
        }
        if d.a1 < 0.0 || !(d.a2 > d.a3 && d.a3 >= 0.0) || !(d.a4 > d.a5 && d.a5 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "dissipativity needs a1 >= 0, a2 > a3 >= 0, a4 > a5 >= 0 (got {:?})",
                [d.a1, d.a2, d.a3, d.a4, d.a5]
            )));
        }
        Ok(())
    }
}

/// `(b, sigma, G)` at one point; `sigma` is row-major `n x m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub drift: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub neutral: Vec<f64>,
}

/// Directional derivatives of `b` in each argument and of `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub drift_x: Vec<f64>,
    pub drift_y: Vec<f64>,
    pub neutral: Vec<f64>,
}

/// Polynomial coefficients of a (possibly neutral) delay equation
///
/// ```text
/// d[X(t) - G(X(t-tau))] = b(X(t), X(t-tau)) dt + sqrt(eps) sigma(X(t), X(t-tau)) dW(t)
/// ```
///
/// The model has no notion of time; evaluation is pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    state_dim: usize,
    noise_dim: usize,
    drift: PolynomialMap,
    diffusion: PolynomialMap,
    neutral: PolynomialMap,
    constants: GrowthConstants,
    dissipativity: Option<Dissipativity>,
}

impl CoefficientModel {
    /// Builds a model from its three maps. `drift` maps `R^n x R^n -> R^n`,
    /// `diffusion` maps `R^n x R^n -> R^(n*m)` (row-major), and `neutral`
    /// has `x_dim == 0` and maps `R^n -> R^n`.
    pub fn new(
        drift: PolynomialMap,
        diffusion: PolynomialMap,
        neutral: PolynomialMap,
    ) -> Result<Self> {
        let n = drift.out_dim();
        if n == 0 {
            return Err(Error::InvalidInput(
                "state dimension must be positive".into(),
            ));
        }
        check_dim("drift x argument", n, drift.x_dim())?;
        check_dim("drift y argument", n, drift.y_dim())?;
        check_dim("diffusion x argument", n, diffusion.x_dim())?;
        check_dim("diffusion y argument", n, diffusion.y_dim())?;
        if diffusion.out_dim() == 0 || !diffusion.out_dim().is_multiple_of(n) {
            return Err(Error::InvalidInput(format!(
                "diffusion output dimension {} is not a positive multiple of n = {n}",
                diffusion.out_dim()
            )));
        }
        check_dim("neutral output", n, neutral.out_dim())?;
        check_dim("neutral x argument", 0, neutral.x_dim())?;
        check_dim("neutral y argument", n, neutral.y_dim())?;
        let m = diffusion.out_dim() / n;
        Ok(Self {
            state_dim: n,
            noise_dim: m,
            drift,
            diffusion,
            neutral,
            constants: GrowthConstants::default(),
            dissipativity: None,
        })
    }

    pub fn with_constants(mut self, constants: GrowthConstants) -> Result<Self> {
        let c = constants;
        if !(c.growth_k >= 0.0
            && c.growth_q >= 1.0
            && c.lipschitz_l >= 0.0
            && c.lipschitz_l0 >= 0.0)
            || [c.growth_k, c.growth_q, c.lipschitz_l, c.lipschitz_l0]
                .iter()
                .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "growth constants need K >= 0, q >= 1, L >= 0, L0 >= 0 (got {c:?})"
            )));
        }
        self.constants = constants;
        Ok(self)
    }

    pub fn with_dissipativity(mut self, d: Option<Dissipativity>) -> Result<Self> {
        if let Some(d) = &d {
            d.validate()?;
        }
        self.dissipativity = d;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn drift(&self) -> &PolynomialMap {
        &self.drift
    }

    pub fn diffusion(&self) -> &PolynomialMap {
        &self.diffusion
    }

    pub fn neutral(&self) -> &PolynomialMap {
        &self.neutral
    }

    pub fn constants(&self) -> &GrowthConstants {
        &self.constants
    }

    pub fn dissipativity(&self) -> Option<&Dissipativity> {
        self.dissipativity.as_ref()
    }

    pub fn is_neutral(&self) -> bool {
        !self.neutral.is_zero()
    }

    /// Any drift monomial of total degree above one.
    pub fn has_superlinear_drift(&self) -> bool {
        self.drift.degree() > 1
    }

    /// `V(x, y) = K(1 + |x|^q + |y|^q)`.
    pub fn growth(&self, x: &[f64], y: &[f64]) -> f64 {
        let q = self.constants.growth_q;
        self.constants.growth_k * (1.0 + norm(x).powf(q) + norm(y).powf(q))
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<Evaluation> {
        self.check_point(x, y)?;
        let n = self.state_dim;
        let mut e = Evaluation {
            drift: vec![0.0; n],
            diffusion: vec![0.0; n * self.noise_dim],
            neutral: vec![0.0; n],
        };
        self.drift_into(x, y, &mut e.drift);
        self.diffusion_into(x, y, &mut e.diffusion);
        self.neutral_into(y, &mut e.neutral);
        Ok(e)
    }

    /// Derivatives along `z`: of `b` in `x`, of `b` in `y`, and of `G`.
    pub fn directional_gradients(&self, x: &[f64], y: &[f64], z: &[f64]) -> Result<Gradients> {
        self.check_point(x, y)?;
        check_dim("direction", self.state_dim, z.len())?;
        let n = self.state_dim;
        let mut g = Gradients {
            drift_x: vec![0.0; n],
            drift_y: vec![0.0; n],
            neutral: vec![0.0; n],
        };
        self.drift.directional_into(Arg::X, x, y, z, &mut g.drift_x);
        self.drift.directional_into(Arg::Y, x, y, z, &mut g.drift_y);
        self.neutral
            .directional_into(Arg::Y, &[], y, z, &mut g.neutral);
        Ok(g)
    }

    #[inline]
    pub fn drift_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.drift.eval_into(x, y, out);
    }

    #[inline]
    pub fn diffusion_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.diffusion.eval_into(x, y, out);
    }

    #[inline]
    pub fn neutral_into(&self, y: &[f64], out: &mut [f64]) {
        self.neutral.eval_into(&[], y, out);
    }

    /// Jacobian of `G` at `y`, row-major `n x n`.
    pub fn neutral_jacobian_into(&self, y: &[f64], out: &mut [f64]) {
        self.neutral.jacobian_into(Arg::Y, &[], y, out);
    }

    fn check_point(&self, x: &[f64], y: &[f64]) -> Result<()> {
        check_dim("x", self.state_dim, x.len())?;
        check_dim("y", self.state_dim, y.len())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sec1_model_values() {
        let m = builtin::paper_sec1();
        let e = m.evaluate(&[1.0], &[1.0]).unwrap();
        assert_eq!(e.drift, vec![5.0]);
        assert_eq!(e.diffusion, vec![4.0]);
        assert_eq!(e.neutral, vec![0.0]);
    }

    #[test]
    fn example_4_1_values() {
        let m = builtin::example_4_1();
        let e = m.evaluate(&[0.0], &[2.0]).unwrap();
        assert_eq!(e.drift, vec![4.0]);
        assert_eq!(e.diffusion, vec![4.0]);
    }

    #[test]
    fn zero_model_is_zero_everywhere() {
        let m = CoefficientModel::new(
            PolynomialMap::zero(1, 1, 1),
            PolynomialMap::zero(1, 1, 1),
            PolynomialMap::zero(1, 0, 1),
        )
        .unwrap();
        let e = m.evaluate(&[3.5], &[-2.0]).unwrap();
        assert_eq!((e.drift[0], e.diffusion[0], e.neutral[0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sec1_gradients() {
        let m = builtin::paper_sec1();
        let g = m.directional_gradients(&[0.3], &[-0.7], &[3.0]).unwrap();
        assert_eq!(g.drift_x, vec![6.0]);
        let g = m.directional_gradients(&[0.3], &[1.0], &[1.0]).unwrap();
        assert_eq!(g.drift_y, vec![9.0]);
        assert_eq!(g.neutral, vec![0.0]);
    }

    #[test]
    fn gradients_match_central_differences() {
        // Central quotient with step 1e-6; the truncation error for these
        // cubic terms is O(h^2) and rounding is O(1e-16 / h).
        let m = builtin::paper_sec1();
        let h = 1e-6;
        let (x, y, z) = (0.4, 1.0, 3.0);
        let fd = |xx: f64, yy: f64| m.evaluate(&[xx], &[yy]).unwrap().drift[0];
        let dx = (fd(x + h * z, y) - fd(x - h * z, y)) / (2.0 * h);
        let dy = (fd(x, y + h) - fd(x, y - h)) / (2.0 * h);
        let g = m.directional_gradients(&[x], &[y], &[z]).unwrap();
        assert!((g.drift_x[0] - dx).abs() < 1e-6, "{} vs {dx}", g.drift_x[0]);
        let g = m.directional_gradients(&[x], &[y], &[1.0]).unwrap();
        assert!((g.drift_y[0] - dy).abs() < 1e-6, "{} vs {dy}", g.drift_y[0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = builtin::paper_sec1();
        assert!(matches!(
            m.evaluate(&[1.0, 2.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(m
            .directional_gradients(&[1.0], &[1.0], &[1.0, 1.0])
            .is_err());
    }

    #[test]
    fn model_dimension_checks() {
        let bad = CoefficientModel::new(
            PolynomialMap::zero(2, 2, 2),
            PolynomialMap::zero(3, 2, 2),
            PolynomialMap::zero(2, 0, 2),
        );
        assert!(bad.is_err());
        let ok = CoefficientModel::new(
            PolynomialMap::zero(2, 2, 2),
            PolynomialMap::zero(6, 2, 2),
            PolynomialMap::zero(2, 0, 2),
        )
        .unwrap();
        assert_eq!((ok.state_dim(), ok.noise_dim()), (2, 3));
    }

    #[test]
    fn dissipativity_constant_rules() {
        let mut d = Dissipativity {
            p: 2.0,
            q: 4.0,
            a1: 0.0,
            a2: 2.0,
            a3: 1.0,
            a4: 3.0,
            a5: 1.0,
        };
        assert!(d.validate().is_ok());
        d.a5 = 0.0;
        assert!(d.validate().is_ok());
        d.q = 2.0;
        assert!(d.validate().is_err());
        d.q = 4.0;
        d.a3 = 2.0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn growth_function() {
        let m = builtin::paper_sec1();
        assert_eq!(m.growth(&[1.0], &[2.0]), 9.0 * (1.0 + 1.0 + 4.0));
        assert!(m.has_superlinear_drift());
        assert!(!builtin::linear_decay().has_superlinear_drift());
    }
}
