//! End-to-end experiments: boundary decay exponents of harmonic functions
//! and the harmonic reduction of g.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::generator::{boundary_power_at, ExponentField, TestFunction};
use crate::geometry::DomainGeometry;
use crate::linalg::{neg, scale, unit};
use crate::montecarlo::{harmonic_estimate, HarmonicEstimate, PathConfig, PathSampler, Payoff, Region};
use crate::projection::{self, HemisphereQuad};
use crate::spectral::StableSpec;
use crate::stats::{fit_power_law, PowerFit, RayPoint};

/// Settings of a decay experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub path: PathConfig,
    pub n_samples: u64,
    pub seed: u64,
    /// Distances t_k in normalized units; `None` uses the geometric default.
    pub rays: Option<Vec<f64>>,
    /// Payoff in normalized coordinates; `None` picks the default for the
    /// domain type.
    pub payoff: Option<Payoff>,
    /// Height of the slab that caps unbounded domains.
    pub slab_height: f64,
    /// On unbounded domains the payoff is h(y) = ⟨y, e_d⟩^β, frozen above
    /// this height so that its variance stays finite.
    pub payoff_cap_height: f64,
    /// Only rays with t in this window enter the fit.
    pub fit_window: Option<(f64, f64)>,
    /// Run in the original coordinates instead of the normalized frame.
    pub original_frame: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            path: PathConfig::default(),
            n_samples: 100_000,
            seed: 1,
            rays: None,
            payoff: None,
            slab_height: 1.0,
            payoff_cap_height: 100.0,
            fit_window: None,
            original_frame: false,
        }
    }
}

/// One ray point of a decay experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayEstimate {
    pub t: f64,
    pub value: f64,
    pub se: f64,
    pub skeleton_fraction: f64,
    pub mean_steps: f64,
}

/// Fit diagnostics of a decay experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostics {
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub slope_se: f64,
    /// Slopes with the window shifted one step toward and away from ∂D.
    pub shifted_slopes: Vec<f64>,
    pub window_sensitive: bool,
    pub max_skeleton_fraction: f64,
    /// β(−n(z)), the exponent of the dual process −X.
    pub beta_reflected: f64,
    pub frame_scale: f64,
}

/// Outcome of [`run_decay_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub z: Vec<f64>,
    pub n: Vec<f64>,
    pub beta_predicted: f64,
    pub beta_fitted: f64,
    pub ci: [f64; 2],
    pub fit_window: (f64, f64),
    pub rays: Vec<RayEstimate>,
    pub diagnostics: DecayDiagnostics,
}

/// Default ray distances: ratio 1/√2 from 0.3·min(collar, 1) down to
/// max(0.02, 5·dt^{1/α}).
pub fn default_rays(alpha: f64, collar: f64, dt: f64) -> Vec<f64> {
    let t_max = 0.3 * collar.min(1.0);
    let t_min = (5.0 * dt.powf(1.0 / alpha)).max(0.02);
    let mut out = Vec::new();
    let mut t = t_max;
    while t >= t_min * (1.0 - 1e-12) {
        out.push(t);
        t /= std::f64::consts::SQRT_2;
    }
    out
}

/// Estimates the decay exponent of a nonnegative harmonic function vanishing
/// near z along the inward normal ray at z.
pub fn run_decay_experiment(
    spec: &StableSpec,
    dom: &DomainGeometry,
    z: &[f64],
    cfg: &DecayConfig,
) -> Result<DecayReport> {
    spec.ensure_valid()?;
    let d = spec.dim();
    if dom.dim() != d || z.len() != d {
        return invalid("dimension mismatch");
    }
    let frame = dom.boundary_frame(z)?;
    let hq = HemisphereQuad::default();
    let beta_predicted = projection::beta(spec, &frame.n, &hq)?;
    let beta_reflected = projection::beta(spec, &neg(&frame.n), &hq)?;
    let dom_n = dom.transformed(&frame)?;
    let collar = dom_n.collar();
    let rays = match &cfg.rays {
        Some(r) => r.clone(),
        None => default_rays(spec.alpha, collar, cfg.path.dt),
    };
    if rays.len() < 4 || rays.windows(2).any(|w| !(w[1] < w[0])) || rays.iter().any(|&t| !(t > 0.0 && t < collar)) {
        return invalid("need at least 4 strictly decreasing ray distances inside the collar");
    }
    let e_d = unit(d, d - 1);
    let mut parts = vec![dom_n.clone()];
    let default_payoff = if dom_n.is_bounded() {
        Payoff::FarIndicator {
            center: vec![0.0; d],
            radius: 2.0,
        }
    } else {
        let h = cfg.slab_height;
        if !(h > rays[0]) {
            return invalid("slab height must exceed the largest ray distance");
        }
        if !(cfg.payoff_cap_height >= h) || !cfg.payoff_cap_height.is_finite() {
            return invalid("payoff cap height must be finite and at least the slab height");
        }
        parts.push(DomainGeometry::half_space(scale(&e_d, h), neg(&e_d))?);
        Payoff::TruncatedPower {
            u: e_d.clone(),
            z: vec![0.0; d],
            beta: beta_predicted,
            cap: cfg.payoff_cap_height.powf(beta_predicted),
        }
    };
    let payoff = cfg.payoff.clone().unwrap_or(default_payoff);
    let (run_spec, region, points, map): (StableSpec, Region, Vec<Vec<f64>>, Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>) =
        if cfg.original_frame {
            let parts_o = parts.iter().map(|p| back_to_original(p, &frame)).collect::<Result<Vec<_>>>()?;
            let pts = rays.iter().map(|&t| frame.to_global(&scale(&e_d, t))).collect();
            let f = frame.clone();
            (spec.clone(), Region::new(parts_o)?, pts, Box::new(move |y: &[f64]| f.to_local(y)))
        } else {
            let pts = rays.iter().map(|&t| scale(&e_d, t)).collect();
            (spec.rotated(&frame.rotation)?, Region::new(parts)?, pts, Box::new(|y: &[f64]| y.to_vec()))
        };
    let sampler = PathSampler::new(&run_spec, &cfg.path)?;
    let mut estimates = Vec::with_capacity(rays.len());
    for (t, x) in rays.iter().zip(&points) {
        let HarmonicEstimate {
            mean,
            std_error,
            skeleton_fraction,
            mean_steps,
            ..
        } = harmonic_estimate(&sampler, &region, x, |y| payoff.eval(&map(y)), cfg.n_samples, cfg.seed)?;
        estimates.push(RayEstimate {
            t: *t,
            value: mean,
            se: std_error,
            skeleton_fraction,
            mean_steps,
        });
    }
    let window = cfg.fit_window.unwrap_or((rays[rays.len() - 1], rays[0]));
    let in_window: Vec<RayPoint> = estimates
        .iter()
        .filter(|r| r.t >= window.0 * (1.0 - 1e-12) && r.t <= window.1 * (1.0 + 1e-12))
        .map(|r| RayPoint { t: r.t, value: r.value, se: r.se })
        .collect();
    let inconclusive = |msg: String| {
        let table = serde_json::to_string(&estimates).unwrap_or_default();
        Err(Error::Inconclusive(format!("{msg}; rays: {table}")))
    };
    if let Some(p) = in_window.iter().find(|p| !(p.value > 2.0 * p.se) || !(p.se > 0.0)) {
        return inconclusive(format!(
            "estimate {} ± {} at t = {} is not positive beyond 2 standard errors",
            p.value, p.se, p.t
        ));
    }
    let fit = match fit_power_law(&in_window) {
        Ok(f) => f,
        Err(Error::Inconclusive(msg)) => return inconclusive(msg),
        Err(e) => return Err(e),
    };
    let shifted_slopes: Vec<f64> = [&in_window[1..], &in_window[..in_window.len() - 1]]
        .iter()
        .filter(|w| w.len() >= 4)
        .filter_map(|w| fit_power_law(w).ok().map(|f: PowerFit| f.slope))
        .collect();
    let half = 0.5 * (fit.ci[1] - fit.ci[0]);
    let window_sensitive = shifted_slopes.iter().any(|s| (s - fit.slope).abs() > half);
    Ok(DecayReport {
        z: z.to_vec(),
        n: frame.n.clone(),
        beta_predicted,
        beta_fitted: fit.slope,
        ci: fit.ci,
        fit_window: window,
        diagnostics: DecayDiagnostics {
            r_squared: fit.r_squared,
            residuals: fit.residuals.clone(),
            slope_se: fit.slope_se,
            shifted_slopes,
            window_sensitive,
            max_skeleton_fraction: estimates.iter().map(|r| r.skeleton_fraction).fold(0.0, f64::max),
            beta_reflected,
            frame_scale: frame.scale,
        },
        rays: estimates,
    })
}

/// The preimage of a normalized-frame domain in original coordinates.
fn back_to_original(local: &DomainGeometry, frame: &crate::geometry::BoundaryFrame) -> Result<DomainGeometry> {
    use crate::geometry::Shape;
    let lam = frame.scale;
    let dir = |v: &[f64]| frame.rotation.apply_t(v);
    let shape = match &local.shape {
        Shape::HalfSpace { point, normal } => Shape::HalfSpace {
            point: frame.to_global(point),
            normal: dir(normal),
        },
        Shape::Ball { center, radius } => Shape::Ball {
            center: frame.to_global(center),
            radius: radius / lam,
        },
        Shape::Ellipsoid { center, semi_axes, axes } => Shape::Ellipsoid {
            center: frame.to_global(center),
            semi_axes: semi_axes.iter().map(|a| a / lam).collect(),
            axes: axes.as_ref().map(|ax| ax.iter().map(|a| dir(a)).collect()),
        },
        Shape::PerturbedBall { .. } => {
            return invalid("original-frame runs are not available for perturbed balls");
        }
    };
    DomainGeometry::new(shape)
}

/// Settings of a reduction check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub path: PathConfig,
    pub n_samples: u64,
    pub seed: u64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            path: PathConfig::default(),
            n_samples: 100_000,
            seed: 1,
        }
    }
}

/// One evaluation point of a reduction check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionPoint {
    pub x: Vec<f64>,
    pub g: f64,
    pub g_r_hat: f64,
    pub se: f64,
    pub ratio: f64,
    pub ratio_se: f64,
}

/// Outcome of [`run_reduction_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub r: f64,
    pub points: Vec<ReductionPoint>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// max |ratio − 1|.
    pub max_deviation: f64,
    /// Largest ratio standard error.
    pub max_ratio_se: f64,
    pub relative_oscillation: f64,
}

/// Default evaluation points: a fixed pattern in D_r scaled with r.
pub fn default_reduction_points(dim: usize, r: f64) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for (lat, h) in [(0.0, 0.25), (0.0, 0.5), (0.3, 0.4), (-0.3, 0.4)] {
        let mut x = vec![0.0; dim];
        x[0] = lat * r;
        x[dim - 1] = h * r;
        pts.push(x);
    }
    pts
}

/// Compares g with its harmonic reduction g_r(x) = E^x g(X_{τ_{D_r}}) on
/// D_r = D ∩ B(z, r) in the normalized frame at z. `points` are normalized
/// coordinates.
pub fn run_reduction_check(
    spec: &StableSpec,
    dom: &DomainGeometry,
    z: &[f64],
    r: f64,
    points: &[Vec<f64>],
    cfg: &ReductionConfig,
) -> Result<ReductionReport> {
    if !(r > 0.0 && r <= 0.25) {
        return invalid("the reduction radius must lie in (0, 1/4]");
    }
    let (spec_n, g) = boundary_power_at(spec, dom, z, ExponentField::Directional)?;
    let d = spec.dim();
    let cap = DomainGeometry::ball(vec![0.0; d], r)?;
    let region = Region::new(vec![g.dom.clone(), cap])?;
    let sampler = PathSampler::new(&spec_n, &cfg.path)?;
    let floor = cfg.path.dt.powf(1.0 / spec.alpha);
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        if !region.contains(x) {
            return Err(Error::DomainError("evaluation point is outside D_r".into()));
        }
        let delta = g.dom.depth(x);
        if delta < floor {
            return Err(Error::Inconclusive(format!(
                "distance {delta} to the boundary is below the time-step scale {floor}"
            )));
        }
        let gx = g.value(x);
        let est = harmonic_estimate(&sampler, &region, x, |y| g.value(y), cfg.n_samples, cfg.seed)?;
        out.push(ReductionPoint {
            x: x.clone(),
            g: gx,
            g_r_hat: est.mean,
            se: est.std_error,
            ratio: est.mean / gx,
            ratio_se: est.std_error / gx,
        });
    }
    let ratios: Vec<f64> = out.iter().map(|p| p.ratio).collect();
    let ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ReductionReport {
        r,
        max_deviation: ratios.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max),
        max_ratio_se: out.iter().map(|p| p.ratio_se).fold(0.0, f64::max),
        relative_oscillation: relative_oscillation(&ratios).unwrap_or(f64::INFINITY),
        points: out,
        ratio_min,
        ratio_max,
    })
}

/// Passes when [ratio_min − 3σ, ratio_max + 3σ] ⊂ [1 − ε, 1 + ε].
pub fn reduction_within(report: &ReductionReport, eps: f64) -> bool {
    let s = 3.0 * report.max_ratio_se;
    report.ratio_min - s >= 1.0 - eps && report.ratio_max + s <= 1.0 + eps
}

/// sup/inf of positive values.
pub fn relative_oscillation(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return invalid("relative oscillation needs values");
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return invalid("relative oscillation needs positive finite values");
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max / min)
}
