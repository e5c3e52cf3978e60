use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit of `ln(estimate) = intercept + slope ln(epsilon)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln epsilon, ln estimate)` pairs actually fitted.
    pub points: Vec<(f64, f64)>,
    /// Epsilons dropped because their estimate was not positive.
    pub excluded: Vec<f64>,
}

impl RateFit {
    pub fn notice(&self) -> Option<String> {
        if self.excluded.is_empty() {
            None
        } else {
            Some(format!(
                "excluded {} non-positive estimate(s) at epsilon {:?}",
                self.excluded.len(),
                self.excluded
            ))
        }
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let mut used = Vec::with_capacity(points.len());
    let mut excluded = Vec::new();
    for &(eps, est) in points {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        if est > 0.0 && est.is_finite() {
            used.push((eps.ln(), est.ln()));
        } else {
            excluded.push(eps);
        }
    }
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a rate fit needs at least 3 positive estimates, got {} ({} excluded)",
            used.len(),
            excluded.len()
        )));
    }
    let (slope, intercept) = least_squares(&used)?;
    let my = used.iter().map(|p| p.1).sum::<f64>() / used.len() as f64;
    let ss_tot: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = used
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: used,
        excluded,
    })
}

fn least_squares(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all epsilons coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
