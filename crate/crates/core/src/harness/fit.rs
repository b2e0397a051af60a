//! Power-law fitting on log-log transformed data.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Result of an ordinary-least-squares fit of `y = prefactor * x^exponent`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fits a power law through at least three strictly positive points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if x <= 0.0 || y <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "power-law fit needs positive data, got ({x}, {y})"
            )));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("all x values coincide; slope undefined".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        points: points.to_vec(),
    })
}
