//! Sampled verification of the structural hypotheses on a model.
//!
//! Each hypothesis is an inequality between norms of coefficient increments
//! (or a pointwise Lyapunov inequality). It is evaluated on a seeded cloud of
//! point pairs drawn uniformly from a ball in `R^n x R^n`; a hypothesis
//! passes iff no sample exceeds its right-hand side by more than `tol`.
//!
//! | name | inequalities                                                        |
//! |------|---------------------------------------------------------------------|
//! | H1   | `|b1-b2| + |s1-s2|_HS <= L|x1-x2| + V(y1,y2)|y1-y2|`                 |
//! | H2   | `|Dxb(x1,y)-Dxb(x2,y)| <= L0|x1-x2|`, `|Dyb(x,y1)-Dyb(x,y2)| <= V(y1,y2)|y1-y2|` |
//! | H3   | `|G(u)-G(v)| <= V(u,v)|u-v|`, `|DG(u)-DG(v)| <= V(u,v)|u-v|`          |
//! | A1   | dissipativity inequality with the model's `(p, q, a1..a5)`           |
//! | A2   | `b`, `sigma` finite on the ball, `|G(u)-G(v)| <= V(u,v)|u-v|`         |
//! | A3   | `|Dxb(x1,y)-Dxb(x2,y)| <= V(x1,x2)|x1-x2|` plus the second halves of H2, H3 |

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{norm, Arg, CoefficientModel, Dissipativity};
use crate::error::{Error, Result};

/// Absolute slack allowed on every sampled inequality.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub radius: f64,
    /// Number of point pairs.
    pub count: usize,
    pub seed: u64,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self {
            radius: 5.0,
            count: 10_000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotConfigured,
}

/// A sample at which an inequality is violated beyond tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub inequality: String,
    pub x1: Vec<f64>,
    pub y1: Vec<f64>,
    /// Empty for pointwise inequalities.
    pub x2: Vec<f64>,
    pub y2: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub verdict: Verdict,
    /// Largest `lhs / rhs` over samples with `rhs > 0`.
    pub worst_ratio: Option<f64>,
    /// Largest `lhs - rhs` over all samples.
    pub worst_excess: f64,
    pub violations: usize,
    pub samples: usize,
    pub witness: Option<Witness>,
}

impl AssumptionCheck {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub cloud: CloudSpec,
    pub tolerance: f64,
    pub checks: Vec<AssumptionCheck>,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True when every named check exists and passed.
    pub fn all_pass(&self, names: &[&str]) -> bool {
        names
            .iter()
            .all(|n| self.get(n).is_some_and(AssumptionCheck::passed))
    }
}

struct Tally {
    name: &'static str,
    tol: f64,
    worst_ratio: Option<f64>,
    worst_excess: f64,
    violations: usize,
    samples: usize,
    witness: Option<Witness>,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            tol,
            worst_ratio: None,
            worst_excess: f64::NEG_INFINITY,
            violations: 0,
            samples: 0,
            witness: None,
        }
    }

    fn record(&mut self, inequality: &str, lhs: f64, rhs: f64, points: [&[f64]; 4]) {
        self.samples += 1;
        let excess = lhs - rhs;
        if rhs > 0.0 {
            let r = lhs / rhs;
            self.worst_ratio = Some(self.worst_ratio.map_or(r, |w| w.max(r)));
        }
        let bad = !(excess <= self.tol);
        if bad {
            self.violations += 1;
        }
        if excess > self.worst_excess || (excess.is_nan() && !self.worst_excess.is_nan()) {
            self.worst_excess = excess;
            if bad {
                self.witness = Some(Witness {
                    inequality: inequality.to_string(),
                    x1: points[0].to_vec(),
                    y1: points[1].to_vec(),
                    x2: points[2].to_vec(),
                    y2: points[3].to_vec(),
                    lhs,
                    rhs,
                });
            }
        }
    }

    fn finish(self) -> AssumptionCheck {
        AssumptionCheck {
            name: self.name.to_string(),
            verdict: if self.violations == 0 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            worst_ratio: self.worst_ratio,
            worst_excess: self.worst_excess,
            violations: self.violations,
            samples: self.samples,
            witness: self.witness,
        }
    }
}

/// Operator (spectral) norm of a row-major `rows x cols` matrix.
fn op_norm(a: &[f64], rows: usize, cols: usize) -> f64 {
    if rows == 1 || cols == 1 {
        return norm(a);
    }
    let m = DMatrix::from_row_slice(rows, cols, a);
    m.singular_values().max()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Both sides of the dissipativity inequality at `(x, y)`.
pub fn dissipativity_sides(
    model: &CoefficientModel,
    d: &Dissipativity,
    x: &[f64],
    y: &[f64],
) -> Result<(f64, f64)> {
    let e = model.evaluate(x, y)?;
    let centered = diff(x, &e.neutral);
    let r = norm(&centered);
    let hs2: f64 = e.diffusion.iter().map(|s| s * s).sum();
    let inner = dot(&centered, &e.drift) + 0.5 * (d.p - 1.0) * hs2;
    // |.|^(p-2) with the convention 0^0 = 1 at p = 2.
    let weight = if d.p == 2.0 { 1.0 } else { r.powf(d.p - 2.0) };
    let lhs = d.p * weight * inner;
    let (nx, ny) = (norm(x), norm(y));
    let rhs = d.a1 - d.a2 * nx.powf(d.p) + d.a3 * ny.powf(d.p) - d.a4 * nx.powf(d.q)
        + d.a5 * ny.powf(d.q);
    Ok((lhs, rhs))
}

fn ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&g);
        if len > 0.0 {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / dim as f64);
            return g.into_iter().map(|v| v * r / len).collect();
        }
    }
}

/// Evaluates H1-H3 and A1-A3 on a seeded cloud of `cloud.count` point pairs.
pub fn check_assumptions(
    model: &CoefficientModel,
    cloud: CloudSpec,
    tol: f64,
) -> Result<AssumptionReport> {
    if cloud.count < 2 {
        return Err(Error::InvalidInput("cloud count must be at least 2".into()));
    }
    if !(cloud.radius > 0.0 && cloud.radius.is_finite()) {
        return Err(Error::InvalidInput("cloud radius must be positive".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput("tolerance must be nonnegative".into()));
    }
    let n = model.state_dim();
    let c = *model.constants();
    let v = |a: &[f64], b: &[f64]| model.growth(a, b);

    let mut h1 = Tally::new("H1", tol);
    let mut h2 = Tally::new("H2", tol);
    let mut h3 = Tally::new("H3", tol);
    let mut a1 = Tally::new("A1", tol);
    let mut a2 = Tally::new("A2", tol);
    let mut a3 = Tally::new("A3", tol);

    let mut rng = ChaCha8Rng::seed_from_u64(cloud.seed);
    let mut jx1 = vec![0.0; n * n];
    let mut jx2 = vec![0.0; n * n];
    let mut jy1 = vec![0.0; n * n];
    let mut jy2 = vec![0.0; n * n];
    let mut dg1 = vec![0.0; n * n];
    let mut dg2 = vec![0.0; n * n];
    let empty: &[f64] = &[];

    for _ in 0..cloud.count {
        let p1 = ball_point(&mut rng, 2 * n, cloud.radius);
        let p2 = ball_point(&mut rng, 2 * n, cloud.radius);
        let (x1, y1) = p1.split_at(n);
        let (x2, y2) = p2.split_at(n);
        let e1 = model.evaluate(x1, y1)?;
        let e2 = model.evaluate(x2, y2)?;
        let dx = norm(&diff(x1, x2));
        let dy = norm(&diff(y1, y2));

        let lhs = norm(&diff(&e1.drift, &e2.drift)) + norm(&diff(&e1.diffusion, &e2.diffusion));
        h1.record(
            "H1",
            lhs,
            c.lipschitz_l * dx + v(y1, y2) * dy,
            [x1, y1, x2, y2],
        );

        // Increments of Dxb in x at shared y = y1, and of Dyb in y at shared x = x1.
        let drift = model.drift();
        drift.jacobian_into(Arg::X, x1, y1, &mut jx1);
        drift.jacobian_into(Arg::X, x2, y1, &mut jx2);
        drift.jacobian_into(Arg::Y, x1, y1, &mut jy1);
        drift.jacobian_into(Arg::Y, x1, y2, &mut jy2);
        let gx = op_norm(&diff(&jx1, &jx2), n, n);
        let gy = op_norm(&diff(&jy1, &jy2), n, n);
        h2.record("H2/x-gradient", gx, c.lipschitz_l0 * dx, [x1, y1, x2, y1]);
        h2.record("H2/y-gradient", gy, v(y1, y2) * dy, [x1, y1, x1, y2]);
        a3.record("A3/x-gradient", gx, v(x1, x2) * dx, [x1, y1, x2, y1]);
        a3.record("A3/y-gradient", gy, v(y1, y2) * dy, [x1, y1, x1, y2]);

        // G at the two delayed states.
        let glip = norm(&diff(&e1.neutral, &e2.neutral));
        model.neutral_jacobian_into(y1, &mut dg1);
        model.neutral_jacobian_into(y2, &mut dg2);
        let gjac = op_norm(&diff(&dg1, &dg2), n, n);
        let vyy = v(y1, y2) * dy;
        h3.record("H3/G", glip, vyy, [empty, y1, empty, y2]);
        h3.record("H3/G-gradient", gjac, vyy, [empty, y1, empty, y2]);
        a2.record("A2/G", glip, vyy, [empty, y1, empty, y2]);
        a3.record("A3/G-gradient", gjac, vyy, [empty, y1, empty, y2]);

        for (x, y, e) in [(x1, y1, &e1), (x2, y2, &e2)] {
            let finite = e.drift.iter().chain(&e.diffusion).all(|s| s.is_finite());
            let (l, r) = if finite {
                (0.0, 0.0)
            } else {
                (f64::INFINITY, 0.0)
            };
            a2.record("A2/locally-bounded", l, r, [x, y, empty, empty]);
            if let Some(d) = model.dissipativity() {
                let (l, r) = dissipativity_sides(model, d, x, y)?;
                a1.record("A1", l, r, [x, y, empty, empty]);
            }
        }
    }

    let mut notes = vec![format!(
        "growth function V(x,y) = {}(1 + |x|^{} + |y|^{}) with a single exponent",
        c.growth_k, c.growth_q, c.growth_q
    )];
    let a1_check = match model.dissipativity() {
        Some(d) => {
            if d.a5 == 0.0 {
                notes.push(
                    "a5 = 0: accepted under a4 > a5 >= 0; the strict form a5 > 0 is not enforced"
                        .into(),
                );
            }
            a1.finish()
        }
        None => {
            notes.push("A1 requested without dissipativity constants".into());
            AssumptionCheck {
                name: "A1".into(),
                verdict: Verdict::NotConfigured,
                worst_ratio: None,
                worst_excess: f64::NAN,
                violations: 0,
                samples: 0,
                witness: None,
            }
        }
    };

    Ok(AssumptionReport {
        cloud,
        tolerance: tol,
        checks: vec![
            h1.finish(),
            h2.finish(),
            h3.finish(),
            a1_check,
            a2.finish(),
            a3.finish(),
        ],
        notes,
    })
}
