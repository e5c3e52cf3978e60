//! Built-in scalar models.

use super::{CoefficientModel, Dissipativity, GrowthConstants, Monomial, PolynomialMap};
use crate::error::{Error, Result};

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &[
    "paper_sec1",
    "paper_sec1_neutral",
    "example_4_1",
    "example_4_2",
    "brownian",
    "linear_decay",
];

/// Scalar polynomial in `(x, y)` from `(xpow, ypow, coeff)` triples.
fn scalar(terms: &[(u32, u32, f64)]) -> PolynomialMap {
    let terms = terms
        .iter()
        .map(|&(a, b, c)| Monomial::new(0, vec![a], vec![b], c))
        .collect();
    PolynomialMap::new(1, 1, 1, terms).expect("scalar terms are well formed")
}

fn scalar_neutral(terms: &[(u32, f64)]) -> PolynomialMap {
    let terms = terms
        .iter()
        .map(|&(b, c)| Monomial::new(0, vec![], vec![b], c))
        .collect();
    PolynomialMap::new(1, 0, 1, terms).expect("scalar terms are well formed")
}

fn build(
    drift: PolynomialMap,
    diffusion: PolynomialMap,
    neutral: PolynomialMap,
    constants: GrowthConstants,
    dissipativity: Option<Dissipativity>,
) -> CoefficientModel {
    CoefficientModel::new(drift, diffusion, neutral)
        .and_then(|m| m.with_constants(constants))
        .and_then(|m| m.with_dissipativity(dissipativity))
        .expect("built-in model is valid")
}

/// `b(x,y) = 2x + 3y^3`, `sigma(x,y) = 4y^2`, `G = 0`, with
/// `V(x,y) = 9(1 + x^2 + y^2)` and `L = L0 = 2`.
pub fn paper_sec1() -> CoefficientModel {
    build(
        scalar(&[(1, 0, 2.0), (0, 3, 3.0)]),
        scalar(&[(0, 2, 4.0)]),
        scalar_neutral(&[]),
        GrowthConstants {
            growth_k: 9.0,
            growth_q: 2.0,
            lipschitz_l: 2.0,
            lipschitz_l0: 2.0,
        },
        None,
    )
}

/// [`paper_sec1`] with the neutral term `G(y) = 0.1 y^2`.
pub fn paper_sec1_neutral() -> CoefficientModel {
    build(
        scalar(&[(1, 0, 2.0), (0, 3, 3.0)]),
        scalar(&[(0, 2, 4.0)]),
        scalar_neutral(&[(2, 0.1)]),
        GrowthConstants {
            growth_k: 9.0,
            growth_q: 2.0,
            lipschitz_l: 2.0,
            lipschitz_l0: 2.0,
        },
        None,
    )
}

/// Dissipativity constants quoted with [`example_4_1`]:
/// `p=2, q=4, a1=0, a2=2, a3=1, a4=3, a5=1`.
pub const EXAMPLE_4_1_QUOTED: Dissipativity = Dissipativity {
    p: 2.0,
    q: 4.0,
    a1: 0.0,
    a2: 2.0,
    a3: 1.0,
    a4: 3.0,
    a5: 1.0,
};

/// Constants for which the inequality holds for the [`example_4_1`]
/// coefficients: the slack is `-(3x^2 - 2xy^2 + y^4/2)`, a negative
/// definite quadratic form in `(x, y^2)`.
pub const EXAMPLE_4_1_SHARP: Dissipativity = Dissipativity {
    p: 2.0,
    q: 4.0,
    a1: 0.0,
    a2: 1.0,
    a3: 0.0,
    a4: 2.0,
    a5: 1.5,
};

/// Dissipativity constants quoted with [`example_4_2`]:
/// `p=2, q=4, a1=0, a2=3, a3=1, a4=2, a5=0`.
pub const EXAMPLE_4_2_QUOTED: Dissipativity = Dissipativity {
    p: 2.0,
    q: 4.0,
    a1: 0.0,
    a2: 3.0,
    a3: 1.0,
    a4: 2.0,
    a5: 0.0,
};

/// Constants for which the inequality holds for the [`example_4_2`]
/// coefficients: the slack is `-(x - y)^2 - x^2`.
pub const EXAMPLE_4_2_SHARP: Dissipativity = Dissipativity {
    p: 2.0,
    q: 4.0,
    a1: 0.0,
    a2: 2.0,
    a3: 1.0,
    a4: 1.0,
    a5: 0.0,
};

// V(x1,x2) = 3(1 + x1^2 + x2^2) dominates 3|x1 + x2| and the constant 2 that
// bound the drift gradient increments of both examples.
const EXAMPLE_GROWTH: GrowthConstants = GrowthConstants {
    growth_k: 3.0,
    growth_q: 2.0,
    lipschitz_l: 2.0,
    lipschitz_l0: 2.0,
};

/// `dx = [y^2 - 2x - x^3] dt + sqrt(eps) y^2 dB` with its quoted constants.
pub fn example_4_1() -> CoefficientModel {
    example_4_1_with(EXAMPLE_4_1_QUOTED)
}

pub fn example_4_1_with(d: Dissipativity) -> CoefficientModel {
    build(
        scalar(&[(0, 2, 1.0), (1, 0, -2.0), (3, 0, -1.0)]),
        scalar(&[(0, 2, 1.0)]),
        scalar_neutral(&[]),
        EXAMPLE_GROWTH,
        Some(d),
    )
}

/// `dx = [-x^3 - 2x + y] dt + sqrt(eps) x^2 dB` with its quoted constants.
pub fn example_4_2() -> CoefficientModel {
    example_4_2_with(EXAMPLE_4_2_QUOTED)
}

pub fn example_4_2_with(d: Dissipativity) -> CoefficientModel {
    build(
        scalar(&[(3, 0, -1.0), (1, 0, -2.0), (0, 1, 1.0)]),
        scalar(&[(2, 0, 1.0)]),
        scalar_neutral(&[]),
        EXAMPLE_GROWTH,
        Some(d),
    )
}

/// `b = 0`, `sigma = 1`, `G = 0`: scaled Brownian motion.
pub fn brownian() -> CoefficientModel {
    build(
        scalar(&[]),
        scalar(&[(0, 0, 1.0)]),
        scalar_neutral(&[]),
        GrowthConstants {
            growth_k: 1.0,
            growth_q: 1.0,
            lipschitz_l: 0.0,
            lipschitz_l0: 0.0,
        },
        None,
    )
}

/// `b = -x`, `sigma = 1`, `G = 0`: Ornstein-Uhlenbeck without delay.
pub fn linear_decay() -> CoefficientModel {
    build(
        scalar(&[(1, 0, -1.0)]),
        scalar(&[(0, 0, 1.0)]),
        scalar_neutral(&[]),
        GrowthConstants {
            growth_k: 1.0,
            growth_q: 1.0,
            lipschitz_l: 1.0,
            lipschitz_l0: 0.0,
        },
        None,
    )
}

pub fn by_name(name: &str) -> Result<CoefficientModel> {
    Ok(match name {
        "paper_sec1" => paper_sec1(),
        "paper_sec1_neutral" => paper_sec1_neutral(),
        "example_4_1" => example_4_1(),
        "example_4_2" => example_4_2(),
        "brownian" => brownian(),
        "linear_decay" => linear_decay(),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown built-in model `{other}` (expected one of {})",
                NAMES.join(", ")
            )))
        }
    })
}

/// Constant history value used when a run does not supply one.
pub fn default_history_value(name: &str) -> f64 {
    match name {
        "paper_sec1" | "paper_sec1_neutral" => 0.1,
        "example_4_1" | "example_4_2" => 0.5,
        "linear_decay" => 1.0,
        _ => 0.0,
    }
}
