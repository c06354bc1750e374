//! Two-sample Kolmogorov–Smirnov test and weighted power-law regression.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};

/// Outcome of a two-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov distribution.
    pub p_value: f64,
}

/// Two-sample KS test. Both samples are sorted in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return invalid("KS test needs nonempty samples");
    }
    if a.iter().chain(b.iter()).any(|v| v.is_nan()) {
        return invalid("KS test samples contain NaN");
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One observation (t, value, standard error).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub t: f64,
    pub value: f64,
    pub se: f64,
}

/// Result of a log-log fit log value = intercept + slope·log t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% t-interval for the slope.
    pub ci: [f64; 2],
    pub slope_se: f64,
    pub r_squared: f64,
    /// Per-point residuals in log space.
    pub residuals: Vec<f64>,
    pub weighted: bool,
}

/// Weighted least squares on (log t, log value) with weights (value/se)²
/// (the inverse variance of log value by the delta method). Falls back to
/// ordinary least squares when every se is zero.
pub fn fit_power_law(points: &[RayPoint]) -> Result<PowerFit> {
    if points.len() < 4 {
        return invalid("a power-law fit needs at least 4 points");
    }
    if points.iter().any(|p| !(p.t > 0.0) || !p.t.is_finite() || !p.se.is_finite() || p.se < 0.0) {
        return invalid("fit points need t > 0 and finite se >= 0");
    }
    let weighted = points.iter().any(|p| p.se > 0.0);
    if weighted {
        if points.iter().any(|p| !(p.se > 0.0)) {
            return invalid("either all or no standard errors may be zero");
        }
        if let Some(p) = points.iter().find(|p| !(p.value > 2.0 * p.se)) {
            return Err(Error::Inconclusive(format!(
                "estimate {} at t = {} is not above 2 standard errors",
                p.value, p.t
            )));
        }
    } else if points.iter().any(|p| !(p.value > 0.0)) {
        return invalid("values must be positive");
    }
    let x: Vec<f64> = points.iter().map(|p| p.t.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let w: Vec<f64> = points
        .iter()
        .map(|p| if weighted { (p.value / p.se).powi(2) } else { 1.0 })
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(a, b)| a * (b - mx).powi(2)).sum();
    if !(sxx > 1e-300) || x.iter().all(|v| (v - x[0]).abs() == 0.0) {
        return invalid("degenerate design: all t are equal");
    }
    let sxy: f64 = (0..x.len()).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = (0..x.len()).map(|i| y[i] - intercept - slope * x[i]).collect();
    let n = x.len() as f64;
    let ssr: f64 = (0..x.len()).map(|i| w[i] * residuals[i].powi(2)).sum();
    let syy: f64 = (0..x.len()).map(|i| w[i] * (y[i] - my).powi(2)).sum();
    let sigma2 = ssr / (n - 2.0);
    let slope_se = (sigma2 / sxx).sqrt();
    let tq = StudentsT::new(0.0, 1.0, n - 2.0)
        .map_err(|e| Error::InvalidState(format!("t distribution: {e}")))?
        .inverse_cdf(0.975);
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(PowerFit {
        slope,
        intercept,
        ci: [slope - tq * slope_se, slope + tq * slope_se],
        slope_se,
        r_squared,
        residuals,
        weighted,
    })
}
