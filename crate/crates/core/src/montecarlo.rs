//! Stable samplers, path simulation and first exits.
//!
//! The d-dimensional process is simulated from a ray discretization of the
//! spectral measure: n directions w_i with cell weights θ_i = ∫_{cell_i} ϑ.
//! Jumps larger than a truncation level ε form a compound Poisson process
//! (direction drawn with probability θ_i/Σθ, radius ε·U^{−1/α}); jumps below ε
//! are replaced by a Gaussian with their covariance, plus the drift that keeps
//! the process strictly stable.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::geometry::DomainGeometry;
use crate::linalg::{dot, norm, sub, Matrix};
use crate::quadrature::GaussLegendre;
use crate::spectral::StableSpec;
use crate::sphere::{fibonacci_sphere, qmc_sphere};

/// The generator behind every sampler: ChaCha8 keyed by (seed, stream).
pub type SimRng = ChaCha8Rng;

/// A reproducible stream; distinct stream ids are independent.
pub fn rng(seed: u64, stream: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// The 1D strictly stable law with Lévy density C⁺z^{−1−α} on z > 0 and
/// C⁻|z|^{−1−α} on z < 0 (plus drift b when α = 1).
///
/// Map to the Chambers–Mallows–Stuck parameters, α ≠ 1:
/// σ^α = −Γ(−α)·cos(πα/2)·(C⁺ + C⁻), skewness s = (C⁺ − C⁻)/(C⁺ + C⁻),
/// so that log E e^{iξY₁} = −σ^α|ξ|^α(1 − i·s·sgn ξ·tan(πα/2)) and
/// α·P(Y₁ > 0) = α/2 + arctan(s·tan(πα/2))/π.
/// At α = 1 (C⁺ = C⁻ = C) the law is Cauchy with scale πC shifted by b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stable1d {
    pub alpha: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub drift_b: f64,
    scale: f64,
    skew: f64,
}

impl Stable1d {
    pub fn new(alpha: f64, c_plus: f64, c_minus: f64, drift_b: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return invalid("alpha must lie in (0, 2)");
        }
        if !(c_plus >= 0.0 && c_minus >= 0.0 && c_plus + c_minus > 0.0) || !c_plus.is_finite() || !c_minus.is_finite() {
            return invalid("need C+, C- >= 0 with positive sum");
        }
        if !drift_b.is_finite() {
            return invalid("drift must be finite");
        }
        if alpha == 1.0 {
            if (c_plus - c_minus).abs() > 1e-12 * (c_plus + c_minus) {
                return invalid("alpha = 1 requires C+ = C-");
            }
            return Ok(Self {
                alpha,
                c_plus,
                c_minus,
                drift_b,
                scale: PI * c_plus,
                skew: 0.0,
            });
        }
        if drift_b != 0.0 {
            return invalid("a drift is only allowed at alpha = 1");
        }
        let sum = c_plus + c_minus;
        let s_alpha = -gamma(-alpha) * (PI * alpha / 2.0).cos() * sum;
        Ok(Self {
            alpha,
            c_plus,
            c_minus,
            drift_b,
            scale: s_alpha.powf(1.0 / alpha),
            skew: (c_plus - c_minus) / sum,
        })
    }

    /// CMS scale σ and skewness s.
    pub fn cms_params(&self) -> (f64, f64) {
        (self.scale, self.skew)
    }

    /// One draw of Y_t.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        let v = PI * (rng.random::<f64>() - 0.5);
        let a = self.alpha;
        if a == 1.0 {
            return self.scale * t * v.tan() + self.drift_b * t;
        }
        let w: f64 = Exp1.sample(rng);
        let tan = (PI * a / 2.0).tan();
        let b = (self.skew * tan).atan() / a;
        let s = (1.0 + self.skew * self.skew * tan * tan).powf(1.0 / (2.0 * a));
        let x = s * (a * (v + b)).sin() / v.cos().powf(1.0 / a)
            * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a);
        self.scale * t.powf(1.0 / a) * x
    }
}

/// Draws Y_t for the law with constants C± (and drift b at α = 1).
pub fn sample_stable_1d<R: Rng + ?Sized>(
    alpha: f64,
    c_plus: f64,
    c_minus: f64,
    drift_b: f64,
    t: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(t > 0.0) {
        return invalid("time must be positive");
    }
    Ok(Stable1d::new(alpha, c_plus, c_minus, drift_b)?.sample(t, rng))
}

/// Small-jump handling below the truncation level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compensation {
    /// Small jumps dropped; their mean (α < 1) is kept as a drift.
    None,
    /// Small jumps replaced by a Gaussian with their covariance.
    Gaussian,
}

/// Path discretization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub n_rays: usize,
    /// Largest truncation level; used for fixed-time increments and far
    /// from the boundary.
    pub eps_jump: f64,
    /// Cap on the length of a continuous sub-step.
    pub dt: f64,
    /// `None` picks Gaussian.
    pub compensation: Option<Compensation>,
    /// Near the boundary the truncation level is eps_rel·δ(x).
    pub eps_rel: f64,
    /// Floor of the distance-adaptive truncation level.
    pub eps_min: f64,
    pub max_steps: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            n_rays: 256,
            eps_jump: 0.1,
            dt: 1e-3,
            compensation: None,
            eps_rel: 0.1,
            eps_min: 1e-8,
            max_steps: 10_000_000,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rays < 64 {
            return invalid("n_rays must be at least 64");
        }
        if !(self.eps_jump > 0.0 && self.eps_jump < 1.0) {
            return invalid("eps_jump must lie in (0, 1)");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid("dt must be positive");
        }
        if !(self.eps_rel > 0.0) || !(self.eps_min > 0.0 && self.eps_min <= self.eps_jump) {
            return invalid("need eps_rel > 0 and 0 < eps_min <= eps_jump");
        }
        if self.max_steps == 0 {
            return invalid("max_steps must be positive");
        }
        Ok(())
    }
}

/// How a path left the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitKind {
    Jump,
    SkeletonStep,
}

impl ExitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitKind::Jump => "jump",
            ExitKind::SkeletonStep => "skeleton-step",
        }
    }
}

/// A first exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitSample {
    pub exit_time: f64,
    pub exit_point: Vec<f64>,
    pub exited_by: ExitKind,
    pub path_steps: u64,
}

/// A discretized spectral measure with everything a path step needs.
#[derive(Debug, Clone)]
pub struct PathSampler {
    pub alpha: f64,
    pub dirs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub cfg: PathConfig,
    compensation: Compensation,
    total: f64,
    /// Σθ_i·w_i.
    mean_dir: Vec<f64>,
    /// Cholesky factor of Σθ_i·w_i·w_iᵀ.
    chol: Matrix,
    alias: WeightedAliasIndex<f64>,
    gamma: Vec<f64>,
}

/// Fine points per ray used to integrate ϑ over cells in d ≥ 3.
const CELL_POINTS_PER_RAY: usize = 200;

impl PathSampler {
    pub fn new(spec: &StableSpec, cfg: &PathConfig) -> Result<Self> {
        cfg.validate()?;
        spec.ensure_valid()?;
        let d = spec.dim();
        let (dirs, weights) = if d == 2 {
            circle_cells(spec, cfg.n_rays)
        } else {
            sphere_cells(spec, cfg.n_rays)
        };
        let total: f64 = weights.iter().sum();
        let mut mean_dir = vec![0.0; d];
        let mut cov = vec![0.0; d * d];
        for (w, t) in dirs.iter().zip(&weights) {
            for i in 0..d {
                mean_dir[i] += t * w[i];
                for j in 0..d {
                    cov[i * d + j] += t * w[i] * w[j];
                }
            }
        }
        let cov = Matrix::from_rows(&cov.chunks(d).map(|r| r.to_vec()).collect::<Vec<_>>())?;
        let chol = cov.cholesky()?;
        let alias = WeightedAliasIndex::new(weights.clone())
            .map_err(|e| Error::InvalidState(format!("ray weights rejected: {e}")))?;
        let compensation = cfg.compensation.unwrap_or(Compensation::Gaussian);
        if spec.is_alpha_one() {
            // A symmetric ϑ on an antipodal ray set has zero first moment.
            mean_dir.iter_mut().for_each(|m| *m = 0.0);
        }
        Ok(Self {
            alpha: spec.alpha,
            dirs,
            weights,
            cfg: cfg.clone(),
            compensation,
            total,
            mean_dir,
            chol,
            alias,
            gamma: spec.drift(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean_dir.len()
    }

    pub fn compensation(&self) -> Compensation {
        self.compensation
    }

    /// Rate of jumps larger than eps: Σθ·eps^{−α}/α.
    pub fn jump_rate(&self, eps: f64) -> f64 {
        self.total * eps.powf(-self.alpha) / self.alpha
    }

    /// Drift per unit time that keeps the truncated process strictly stable.
    fn drift(&self, eps: f64) -> Vec<f64> {
        let a = self.alpha;
        if a == 1.0 {
            return self.gamma.clone();
        }
        let c = if a < 1.0 {
            eps.powf(1.0 - a) / (1.0 - a)
        } else {
            -eps.powf(1.0 - a) / (a - 1.0)
        };
        self.mean_dir.iter().map(|m| m * c).collect()
    }

    /// Adds the continuous part (drift and small jumps) over time s.
    fn continuous<R: Rng + ?Sized>(&self, x: &mut [f64], eps: f64, s: f64, rng: &mut R) {
        let drift = self.drift(eps);
        for (xi, di) in x.iter_mut().zip(&drift) {
            *xi += di * s;
        }
        if self.compensation == Compensation::Gaussian {
            let a = self.alpha;
            let sd = (eps.powf(2.0 - a) / (2.0 - a) * s).sqrt();
            let d = x.len();
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            for i in 0..d {
                let mut v = 0.0;
                for j in 0..=i {
                    v += self.chol.get(i, j) * z[j];
                }
                x[i] += sd * v;
            }
        }
    }

    /// Adds one jump larger than eps.
    fn jump<R: Rng + ?Sized>(&self, x: &mut [f64], eps: f64, rng: &mut R) {
        let i = self.alias.sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = eps * u.powf(-1.0 / self.alpha);
        for (xi, wi) in x.iter_mut().zip(&self.dirs[i]) {
            *xi += r * wi;
        }
    }

    /// One increment X_t with truncation level eps_jump.
    pub fn increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<Vec<f64>> {
        if !(t > 0.0) || !t.is_finite() {
            return invalid("time must be positive");
        }
        let eps = self.cfg.eps_jump;
        let mut x = vec![0.0; self.dim()];
        self.continuous(&mut x, eps, t, rng);
        let lambda = self.jump_rate(eps) * t;
        let n = Poisson::new(lambda)
            .map_err(|e| Error::InvalidState(format!("jump count: {e}")))?
            .sample(rng) as u64;
        for _ in 0..n {
            self.jump(&mut x, eps, rng);
        }
        Ok(x)
    }

    /// Simulates from x0 until the path leaves `region`.
    pub fn sample_exit<R: Rng + ?Sized>(&self, region: &Region, x0: &[f64], rng: &mut R) -> Result<ExitSample> {
        if x0.len() != self.dim() || region.dim() != self.dim() {
            return invalid("dimension mismatch");
        }
        if !region.contains(x0) {
            return Err(Error::DomainError("starting point is not inside the domain".into()));
        }
        let cfg = &self.cfg;
        let mut x = x0.to_vec();
        let mut t = 0.0;
        for step in 1..=cfg.max_steps {
            let depth = region.depth(&x).max(0.0);
            let eps = (cfg.eps_rel * depth).clamp(cfg.eps_min, cfg.eps_jump);
            let wait: f64 = Exp1.sample(rng);
            let wait = wait / self.jump_rate(eps);
            let s = wait.min(cfg.dt);
            self.continuous(&mut x, eps, s, rng);
            t += s;
            if !region.contains(&x) {
                return Ok(ExitSample {
                    exit_time: t,
                    exit_point: x,
                    exited_by: ExitKind::SkeletonStep,
                    path_steps: step,
                });
            }
            if wait <= cfg.dt {
                self.jump(&mut x, eps, rng);
                if !region.contains(&x) {
                    return Ok(ExitSample {
                        exit_time: t,
                        exit_point: x,
                        exited_by: ExitKind::Jump,
                        path_steps: step,
                    });
                }
            }
        }
        Err(Error::BudgetExceeded {
            budget: cfg.max_steps,
            time: t,
            position: x,
        })
    }
}

/// Uniform angles with Gauss–Legendre cell integrals of ϑ.
fn circle_cells(spec: &StableSpec, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = n + (n % 2);
    let h = 2.0 * PI / n as f64;
    let gl = GaussLegendre::new(8);
    let mut dirs = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let c = h * k as f64;
        dirs.push(vec![c.cos(), c.sin()]);
        weights.push(gl.integrate(c - h / 2.0, c + h / 2.0, |t| spec.theta.eval(&[t.cos(), t.sin()])));
    }
    (dirs, weights)
}

/// Antipodal ray set (half set plus negatives) with cell weights from a fine
/// antipodal point set assigned to the nearest ray.
fn sphere_cells(spec: &StableSpec, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = spec.dim();
    let half = n.div_ceil(2);
    let upper = |pts: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        pts.into_iter()
            .map(|p| if p[d - 1] < 0.0 { p.iter().map(|v| -v).collect() } else { p })
            .collect()
    };
    let base = if d == 3 {
        upper(fibonacci_sphere(2 * half).into_iter().filter(|p| p[2] > 0.0).take(half).collect())
    } else {
        upper(qmc_sphere(half, d, &vec![0.5; d]))
    };
    let mut dirs = base.clone();
    dirs.extend(base.iter().map(|p| p.iter().map(|v| -v).collect::<Vec<f64>>()));
    let m = half * CELL_POINTS_PER_RAY;
    let fine_half = if d == 3 {
        upper(fibonacci_sphere(2 * m).into_iter().filter(|p| p[2] > 0.0).collect())
    } else {
        upper(qmc_sphere(m, d, &vec![0.25; d]))
    };
    let area = crate::sphere::sphere_area(d) / (2 * fine_half.len()) as f64;
    let mut weights = vec![0.0; dirs.len()];
    for p in &fine_half {
        // The nearest ray to −p is the antipode of the nearest ray to p.
        let (mut best, mut bi) = (f64::NEG_INFINITY, 0);
        for (i, w) in base.iter().enumerate() {
            let c = dot(p, w).abs();
            if c > best {
                best = c;
                bi = i;
            }
        }
        let s = if dot(p, &base[bi]) >= 0.0 { 0 } else { half };
        let q: Vec<f64> = p.iter().map(|v| -v).collect();
        weights[bi + s] += spec.theta.eval(p) * area;
        weights[bi + (half - s)] += spec.theta.eval(&q) * area;
    }
    (dirs, weights)
}

/// An intersection of domains: a point is inside when it is inside all.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub parts: Vec<DomainGeometry>,
}

impl Region {
    pub fn new(parts: Vec<DomainGeometry>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("a region needs at least one domain");
        };
        if parts.iter().any(|p| p.dim() != first.dim()) {
            return invalid("region parts must share a dimension");
        }
        Ok(Self { parts })
    }

    pub fn single(dom: DomainGeometry) -> Self {
        Self { parts: vec![dom] }
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.parts.iter().all(|p| p.contains(x))
    }

    /// Lower bound on the distance to the complement.
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.depth(x)).fold(f64::INFINITY, f64::min)
    }
}

/// Bounded payoffs evaluated at exit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Payoff {
    Constant { value: f64 },
    /// 1 when |y − center| > radius.
    FarIndicator { center: Vec<f64>, radius: f64 },
    /// min((⟨y − z, u⟩)_+^β, cap).
    TruncatedPower { u: Vec<f64>, z: Vec<f64>, beta: f64, cap: f64 },
}

impl Payoff {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Payoff::Constant { value } => *value,
            Payoff::FarIndicator { center, radius } => {
                if norm(&sub(y, center)) > *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Payoff::TruncatedPower { u, z, beta, cap } => {
                let a = dot(&sub(y, z), u);
                if a > 0.0 {
                    a.powf(*beta).min(*cap)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Monte Carlo estimate of E^{x0}[payoff(X_τ)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_effective: u64,
    /// Fraction of exits through a continuous sub-step.
    pub skeleton_fraction: f64,
    pub mean_steps: f64,
}

/// Averages payoff(X_τ) over n replicas; replica i uses stream `i` of `seed`
/// so repeated calls with the same seed share random numbers.
pub fn harmonic_estimate<F>(
    sampler: &PathSampler,
    region: &Region,
    x0: &[f64],
    payoff: F,
    n_samples: u64,
    seed: u64,
) -> Result<HarmonicEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_samples < 2 {
        return invalid("need at least two samples");
    }
    let draws: Vec<(f64, bool, u64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed, i);
            let e = sampler.sample_exit(region, x0, &mut r)?;
            let v = payoff(&e.exit_point);
            if !v.is_finite() {
                return Err(Error::NumericFailure {
                    what: "payoff is not finite at an exit point".into(),
                    best: v,
                    achieved: f64::NAN,
                });
            }
            Ok((v, e.exited_by == ExitKind::SkeletonStep, e.path_steps))
        })
        .collect::<Result<_>>()?;
    let n = draws.len() as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let skel = draws.iter().filter(|d| d.1).count() as f64 / n;
    let steps = draws.iter().map(|d| d.2 as f64).sum::<f64>() / n;
    Ok(HarmonicEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_effective: draws.len() as u64,
        skeleton_fraction: skel,
        mean_steps: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{beta_from_constants, directional_law, HemisphereQuad};

    #[test]
    fn cms_parameters_round_trip_to_beta() {
        for (a, cp, cm) in [(0.6, 2.0, 1.0), (1.5, 2.467, 1.029), (1.2, 0.3, 1.7)] {
            let s = Stable1d::new(a, cp, cm, 0.0).unwrap();
            let (_, skew) = s.cms_params();
            let rho = 0.5 + (skew * (PI * a / 2.0).tan()).atan() / (PI * a);
            let b = beta_from_constants(a, cp, cm, None).unwrap();
            assert!((a * rho - b).abs() < 1e-14);
        }
    }

    #[test]
    fn cms_positivity_frequency() {
        let spec = StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![1.0, 0.0]).unwrap();
        let law = directional_law(&spec, &[1.0, 0.0], &HemisphereQuad::default()).unwrap();
        let s = Stable1d::new(1.5, law.c_plus, law.c_minus, 0.0).unwrap();
        let mut r = rng(11, 0);
        let n = 200_000;
        let pos = (0..n).filter(|_| s.sample(1.0, &mut r) > 0.0).count() as f64 / n as f64;
        let se = (pos * (1.0 - pos) / n as f64).sqrt();
        assert!((1.5 * pos - law.beta).abs() < 4.0 * 1.5 * se);
    }

    #[test]
    fn antipodal_rays_have_mirror_weights_for_symmetric_theta() {
        let spec = StableSpec::isotropic(1.0, 3).unwrap();
        let s = PathSampler::new(&spec, &PathConfig::default()).unwrap();
        let h = s.dirs.len() / 2;
        for i in 0..h {
            assert!((s.weights[i] - s.weights[i + h]).abs() < 1e-15);
        }
        let total: f64 = s.weights.iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn exits_are_exterior() {
        let spec = StableSpec::isotropic(1.5, 2).unwrap();
        let s = PathSampler::new(&spec, &PathConfig::default()).unwrap();
        let reg = Region::single(DomainGeometry::ball(vec![0.0, 0.0], 1.0).unwrap());
        let mut r = rng(3, 0);
        for _ in 0..200 {
            let e = s.sample_exit(&reg, &[0.0, 0.0], &mut r).unwrap();
            assert!(!reg.contains(&e.exit_point) && e.exit_time > 0.0);
        }
    }

    #[test]
    fn constant_payoff_has_zero_variance() {
        let spec = StableSpec::isotropic(0.8, 2).unwrap();
        let s = PathSampler::new(&spec, &PathConfig::default()).unwrap();
        let reg = Region::single(DomainGeometry::ball(vec![0.0, 0.0], 1.0).unwrap());
        let e = harmonic_estimate(&s, &reg, &[0.2, 0.0], |_| 1.0, 100, 5).unwrap();
        assert_eq!((e.mean, e.std_error), (1.0, 0.0));
    }
}
