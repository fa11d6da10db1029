//! Log-log rate fits.

use serde::Serialize;

use crate::{Error, Result};

/// Least-squares line through `(ln x, ln y)`.
///
/// With the same logarithm on both axes `slope` is the power-law exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub log_x: Vec<f64>,
    pub log_y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination in `[0, 1]`; 1 when `y` is constant.
    pub r2: f64,
}

/// Fits `y ≈ C x^slope` from at least three strictly positive points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "a rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::invalid(format!(
            "rate fit needs finite positive points, got ({x}, {y})"
        )));
    }
    let log_x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let log_y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = points.len() as f64;
    let mx = log_x.iter().sum::<f64>() / n;
    let my = log_y.iter().sum::<f64>() / n;
    let sxx: f64 = log_x.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = log_x.iter().zip(&log_y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = log_y.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = log_x
        .iter()
        .zip(&log_y)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy <= f64::EPSILON * f64::EPSILON {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        log_x,
        log_y,
        slope,
        intercept,
        r2,
    })
}

/// Exponent implied by two points, `ln(y₁/y₀) / ln(x₁/x₀)`.
pub fn two_point_exponent(a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let ok = |p: (f64, f64)| p.0 > 0.0 && p.1 > 0.0;
    (ok(a) && ok(b) && a.0 != b.0).then(|| (b.1 / a.1).ln() / (b.0 / a.0).ln())
}
