use serde::Serialize;

use crate::error::{FluidexError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(FluidexError::Domain("linear fit needs at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FluidexError::Domain("linear fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(LinearFit { slope, intercept, residual: (ss / n).sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual in log space.
    pub residual: f64,
    /// Largest `|y/ŷ − 1|` over the points.
    pub max_rel_dev: f64,
}

/// Log-log least-squares slope of `(param, norm)` pairs.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(FluidexError::Domain(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some((p, v)) = points.iter().find(|(p, v)| !(*p > 0.0 && *v > 0.0)) {
        return Err(FluidexError::Domain(format!(
            "slope fit needs positive values, got ({p}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let lf = linear_fit(&xs, &ys)?;
    let max_rel_dev = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| ((y - lf.slope * x - lf.intercept).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(SlopeFit { slope: lf.slope, intercept: lf.intercept, residual: lf.residual, max_rel_dev })
}
