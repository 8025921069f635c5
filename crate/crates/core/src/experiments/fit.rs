use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Least-squares fit of `log y = log c + p log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    /// Half-width of the 95% confidence interval of the exponent; infinite
    /// with only two points.
    pub confidence: f64,
    pub prefactor: f64,
    pub points: usize,
    pub r_squared: f64,
}

/// Fits a power law through the pairs with `x > 0` and `y > 0`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("{} abscissae but {} values", x.len(), y.len())));
    }
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("power-law fit needs two positive points, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidInput("power-law fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let confidence = if n > 2 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
        t.inverse_cdf(0.975) * se
    } else {
        f64::INFINITY
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerFit { exponent: slope, confidence, prefactor: intercept.exp(), points: n, r_squared })
}

/// Drift exponent with the two reference exponents it is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftFit {
    pub fit: PowerFit,
    pub window: (f64, f64),
    /// Exponent of the energy-level bound.
    pub reference_energy: f64,
    /// Exponent of the pointwise bound.
    pub reference_pointwise: f64,
    pub sublinear: bool,
}

/// Slope of `log drift` against `log t` over `t` in `window`. Samples with
/// nonpositive drift are dropped.
pub fn fit_drift_exponent(t: &[f64], drift: &[f64], window: (f64, f64)) -> Result<DriftFit> {
    if t.len() != drift.len() {
        return Err(Error::InvalidInput(format!("{} times but {} drift values", t.len(), drift.len())));
    }
    let positive_t = t.iter().filter(|&&s| s > 0.0).count();
    if positive_t < 10 {
        return Err(Error::InvalidInput(format!("drift fit needs at least 10 samples with t > 0, got {positive_t}")));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(drift)
        .filter(|(s, d)| **s > 0.0 && **s >= window.0 && **s <= window.1 && **d > 0.0)
        .map(|(s, d)| (*s, *d))
        .unzip();
    if x.len() < 5 {
        return Err(Error::InvalidInput(format!("drift fit has {} usable points, needs 5", x.len())));
    }
    let fit = fit_power_law(&x, &y)?;
    Ok(DriftFit {
        fit,
        window,
        reference_energy: 0.5,
        reference_pointwise: 0.25,
        sublinear: fit.exponent <= 0.95,
    })
}
