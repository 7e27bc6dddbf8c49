//! Least-squares power-law fits.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("points must be positive and finite; offending (index, x, y): {0:?}")]
    NonPositive(Vec<(usize, f64, f64)>),
    #[error("all x values coincide")]
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `log y` against `log x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let bad: Vec<_> = points
        .iter()
        .enumerate()
        .filter(|(_, (x, y))| !(x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0))
        .map(|(i, (x, y))| (i, *x, *y))
        .collect();
    if !bad.is_empty() {
        return Err(FitError::NonPositive(bad));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 || ss_res <= 1e-28 * ss_tot.max(1.0) {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LogLogFit { slope, intercept, r_squared })
}
