//! Polynomial maps `(x, y) -> R^k` stored as explicit term lists.
//!
//! Derivatives are taken by formal differentiation of each monomial, so
//! gradient evaluation carries only floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Which argument of a map a derivative is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arg {
    /// The current state `x`.
    X,
    /// The delayed state `y`.
    Y,
}

/// One monomial `coeff * prod x_i^xpow[i] * prod y_i^ypow[i]` contributing
/// to output coordinate `output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub output: usize,
    pub xpow: Vec<u32>,
    pub ypow: Vec<u32>,
    pub coeff: f64,
}

impl Monomial {
    pub fn new(output: usize, xpow: Vec<u32>, ypow: Vec<u32>, coeff: f64) -> Self {
        Self {
            output,
            xpow,
            ypow,
            coeff,
        }
    }

    /// Total degree in both arguments.
    pub fn degree(&self) -> u32 {
        self.xpow.iter().chain(&self.ypow).sum()
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.coeff * power_product(&self.xpow, x) * power_product(&self.ypow, y)
    }

    /// d/d(arg_j) of the monomial.
    fn partial(&self, arg: Arg, j: usize, x: &[f64], y: &[f64]) -> f64 {
        let (pows, v, other_pows, other) = match arg {
            Arg::X => (&self.xpow, x, &self.ypow, y),
            Arg::Y => (&self.ypow, y, &self.xpow, x),
        };
        let a = pows[j];
        if a == 0 || self.coeff == 0.0 {
            return 0.0;
        }
        let mut acc = self.coeff * f64::from(a) * v[j].powi(a as i32 - 1);
        for (l, (&p, &vl)) in pows.iter().zip(v).enumerate() {
            if l != j && p != 0 {
                acc *= vl.powi(p as i32);
            }
        }
        acc * power_product(other_pows, other)
    }
}

fn power_product(pows: &[u32], v: &[f64]) -> f64 {
    pows.iter()
        .zip(v)
        .filter(|(&p, _)| p != 0)
        .map(|(&p, &vi)| vi.powi(p as i32))
        .product()
}

/// A polynomial map from `(x in R^x_dim, y in R^y_dim)` to `R^out_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMap {
    out_dim: usize,
    x_dim: usize,
    y_dim: usize,
    terms: Vec<Monomial>,
}

impl PolynomialMap {
    pub fn zero(out_dim: usize, x_dim: usize, y_dim: usize) -> Self {
        Self {
            out_dim,
            x_dim,
            y_dim,
            terms: Vec::new(),
        }
    }

    pub fn new(out_dim: usize, x_dim: usize, y_dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        let mut map = Self::zero(out_dim, x_dim, y_dim);
        for t in terms {
            map.push(t)?;
        }
        Ok(map)
    }

    pub fn push(&mut self, term: Monomial) -> Result<()> {
        if term.output >= self.out_dim {
            return Err(Error::InvalidInput(format!(
                "monomial output index {} out of range (output dimension {})",
                term.output, self.out_dim
            )));
        }
        check_dim("monomial x exponents", self.x_dim, term.xpow.len())?;
        check_dim("monomial y exponents", self.y_dim, term.ypow.len())?;
        if !term.coeff.is_finite() {
            return Err(Error::InvalidInput(
                "non-finite monomial coefficient".into(),
            ));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    /// Highest total degree of any nonzero term (0 for the zero map).
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.coeff != 0.0)
            .map(Monomial::degree)
            .max()
            .unwrap_or(0)
    }

    /// Highest total degree in `x` alone, and in `y` alone.
    pub fn partial_degrees(&self) -> (u32, u32) {
        self.terms
            .iter()
            .filter(|t| t.coeff != 0.0)
            .fold((0, 0), |(dx, dy), t| {
                (dx.max(t.xpow.iter().sum()), dy.max(t.ypow.iter().sum()))
            })
    }

    /// Writes the value at `(x, y)` into `out` (overwriting it).
    pub fn eval_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.out_dim);
        out.fill(0.0);
        for t in &self.terms {
            out[t.output] += t.value(x, y);
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_args(x, y)?;
        let mut out = vec![0.0; self.out_dim];
        self.eval_into(x, y, &mut out);
        Ok(out)
    }

    /// Row-major Jacobian (`out_dim x arg_dim`) with respect to `arg`.
    pub fn jacobian_into(&self, arg: Arg, x: &[f64], y: &[f64], out: &mut [f64]) {
        let cols = self.arg_dim(arg);
        debug_assert_eq!(out.len(), self.out_dim * cols);
        out.fill(0.0);
        for t in &self.terms {
            for j in 0..cols {
                out[t.output * cols + j] += t.partial(arg, j, x, y);
            }
        }
    }

    pub fn jacobian(&self, arg: Arg, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_args(x, y)?;
        let mut out = vec![0.0; self.out_dim * self.arg_dim(arg)];
        self.jacobian_into(arg, x, y, &mut out);
        Ok(out)
    }

    /// Directional derivative along `z` in argument `arg`, written into `out`.
    pub fn directional_into(&self, arg: Arg, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for t in &self.terms {
            let mut acc = 0.0;
            for (j, &zj) in z.iter().enumerate() {
                if zj != 0.0 {
                    acc += t.partial(arg, j, x, y) * zj;
                }
            }
            out[t.output] += acc;
        }
    }

    pub fn directional(&self, arg: Arg, x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_args(x, y)?;
        check_dim("direction", self.arg_dim(arg), z.len())?;
        let mut out = vec![0.0; self.out_dim];
        self.directional_into(arg, x, y, z, &mut out);
        Ok(out)
    }

    fn arg_dim(&self, arg: Arg) -> usize {
        match arg {
            Arg::X => self.x_dim,
            Arg::Y => self.y_dim,
        }
    }

    fn check_args(&self, x: &[f64], y: &[f64]) -> Result<()> {
        check_dim("x argument", self.x_dim, x.len())?;
        check_dim("y argument", self.y_dim, y.len())
    }
}
