//! One-dimensional projections of the process: the constants C⁺(u), C⁻(u)
//! of the projected Lévy density and the positivity exponent β(u).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_unit, dot, neg, orthogonal_complement};
use crate::quadrature::{graded_toward, Estimate, GaussLegendre};
use crate::spectral::{angle2, StableSpec, Theta, ALPHA_ONE_GAP};
use crate::sphere::{cube_to_sphere, direction_grid, halton_point, sphere_area};

use std::f64::consts::PI;

/// Hemisphere quadrature settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HemisphereQuad {
    /// Gauss–Legendre order per angular panel.
    pub order: usize,
    /// Geometric grading levels toward the equator (ratio 1/2).
    pub grading_levels: usize,
    /// Trapezoid nodes in azimuth (d = 3).
    pub azimuth_nodes: usize,
    /// Requested relative error.
    pub tol: f64,
    /// Number of order doublings allowed before giving up.
    pub max_refinements: usize,
    /// Points per randomized QMC replicate (d ≥ 4).
    pub qmc_points: usize,
    /// Number of random shifts (d ≥ 4).
    pub qmc_shifts: usize,
    /// Seed for the QMC shifts.
    pub seed: u64,
}

impl Default for HemisphereQuad {
    fn default() -> Self {
        Self {
            order: 16,
            grading_levels: 8,
            azimuth_nodes: 64,
            tol: 1e-9,
            max_refinements: 4,
            qmc_points: 1 << 14,
            qmc_shifts: 16,
            seed: 0x5eed,
        }
    }
}

impl HemisphereQuad {
    /// Relative tolerance actually enforced: tabulated densities are only
    /// Lipschitz, so product rules in d = 3 cannot reach closed-form accuracy.
    fn effective_tol(&self, spec: &StableSpec) -> f64 {
        if spec.dim() == 3 && spec.theta.is_tabulated() {
            self.tol.max(1e-6)
        } else {
            self.tol
        }
    }
}

/// Projection data for a direction `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalLaw {
    pub u: Vec<f64>,
    pub c_plus: f64,
    pub c_minus: f64,
    pub beta: f64,
    /// ⟨γ, u⟩, present only at α = 1.
    pub drift_b: Option<f64>,
    /// Absolute error estimates of C⁺, C⁻ and of β (delta method).
    pub c_plus_err: f64,
    pub c_minus_err: f64,
    pub beta_err: f64,
}

/// Global extremes of β over a direction grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBounds {
    pub beta_min: f64,
    pub beta_max: f64,
    pub argmin_u: Vec<f64>,
    pub argmax_u: Vec<f64>,
}

/// Exclusive bounds max{0, α−1} < β < min{α, 1}.
pub fn beta_range(alpha: f64) -> (f64, f64) {
    ((alpha - 1.0).max(0.0), alpha.min(1.0))
}

/// β from the projection constants.
///
/// For α ≠ 1: β = α/2 + arctan(((C⁺−C⁻)/(C⁺+C⁻))·tan(απ/2))/π.
/// For α = 1 the projection is Cauchy with scale πC⁺ and drift b, so
/// β = 1/2 + arctan(b/(πC⁺))/π.
pub fn beta_from_constants(alpha: f64, c_plus: f64, c_minus: f64, drift_b: Option<f64>) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return invalid(format!("alpha = {alpha} outside (0, 2)"));
    }
    if !(c_plus >= 0.0 && c_minus >= 0.0 && c_plus + c_minus > 0.0) {
        return invalid("projection constants must be nonnegative with positive sum");
    }
    if alpha == 1.0 {
        let b = drift_b.unwrap_or(0.0);
        return Ok(0.5 + (b / (PI * c_plus)).atan() / PI);
    }
    if (alpha - 1.0).abs() < ALPHA_ONE_GAP {
        return invalid("alpha too close to 1 for the alpha != 1 formula");
    }
    if drift_b.is_some_and(|b| b != 0.0) {
        return invalid("drift is only admitted at alpha = 1");
    }
    let r = (c_plus - c_minus) / (c_plus + c_minus);
    Ok(alpha / 2.0 + (r * (alpha * PI / 2.0).tan()).atan() / PI)
}

/// Delta-method error of β given absolute errors of C⁺ and C⁻.
fn beta_error(alpha: f64, cp: f64, cm: f64, b: f64, ep: f64, em: f64) -> f64 {
    if alpha == 1.0 {
        let q = b / (PI * cp);
        let d = q / cp / (PI * (1.0 + q * q));
        return d.abs() * ep;
    }
    let t = (alpha * PI / 2.0).tan();
    let s = cp + cm;
    let r = (cp - cm) / s;
    let db = t / (PI * (1.0 + r * r * t * t));
    (db * 2.0 / (s * s)).abs() * (cm * ep + cp * em)
}

/// Hemisphere integral ∫_{⟨u,w⟩>0} ϑ(w)⟨u,w⟩^α dw.
pub fn c_plus(spec: &StableSpec, u: &[f64], quad: &HemisphereQuad) -> Result<Estimate> {
    check_direction(spec, u)?;
    match spec.dim() {
        2 | 3 => deterministic_c_plus(spec, u, quad),
        _ => Ok(qmc_constants(spec, u, quad)?.0),
    }
}

/// C⁻(u) = C⁺(−u).
pub fn c_minus(spec: &StableSpec, u: &[f64], quad: &HemisphereQuad) -> Result<Estimate> {
    c_plus(spec, &neg(u), quad)
}

/// β(u).
pub fn beta(spec: &StableSpec, u: &[f64], quad: &HemisphereQuad) -> Result<f64> {
    Ok(directional_law(spec, u, quad)?.beta)
}

/// Full projection data for `u`.
pub fn directional_law(spec: &StableSpec, u: &[f64], quad: &HemisphereQuad) -> Result<DirectionalLaw> {
    check_direction(spec, u)?;
    let (cp, cm) = match spec.dim() {
        2 | 3 => (
            deterministic_c_plus(spec, u, quad)?,
            deterministic_c_plus(spec, &neg(u), quad)?,
        ),
        _ => qmc_constants(spec, u, quad)?,
    };
    law_from(spec, u, cp, cm)
}

fn law_from(spec: &StableSpec, u: &[f64], cp: Estimate, cm: Estimate) -> Result<DirectionalLaw> {
    let drift_b = if spec.is_alpha_one() {
        Some(dot(&spec.drift(), u))
    } else {
        None
    };
    let beta = beta_from_constants(spec.alpha, cp.value, cm.value, drift_b)?;
    let (lo, hi) = beta_range(spec.alpha);
    if !(beta > lo && beta < hi) {
        return Err(Error::NumericFailure {
            what: "beta outside its admissible range".into(),
            best: beta,
            achieved: f64::NAN,
        });
    }
    Ok(DirectionalLaw {
        u: u.to_vec(),
        c_plus: cp.value,
        c_minus: cm.value,
        beta,
        drift_b,
        c_plus_err: cp.err,
        c_minus_err: cm.err,
        beta_err: beta_error(
            spec.alpha,
            cp.value,
            cm.value,
            drift_b.unwrap_or(0.0),
            cp.err,
            cm.err,
        ),
    })
}

/// Density of the projection ⟨X, u⟩'s Lévy measure at `z`.
pub fn projected_density(spec: &StableSpec, u: &[f64], z: f64, quad: &HemisphereQuad) -> Result<f64> {
    if z == 0.0 || !z.is_finite() {
        return invalid("projected density is singular at z = 0");
    }
    let c = if z > 0.0 {
        c_plus(spec, u, quad)?
    } else {
        c_minus(spec, u, quad)?
    };
    Ok(c.value * z.abs().powf(-1.0 - spec.alpha))
}

/// Extremes of β over `n_dirs` quasi-uniform directions.
pub fn beta_bounds(spec: &StableSpec, quad: &HemisphereQuad, n_dirs: usize) -> Result<BetaBounds> {
    if n_dirs < 128 {
        return invalid("beta_bounds needs at least 128 directions");
    }
    let grid = direction_grid(spec.dim(), n_dirs);
    let betas = beta_map(spec, &grid, quad)?;
    let mut b = BetaBounds {
        beta_min: f64::INFINITY,
        beta_max: f64::NEG_INFINITY,
        argmin_u: grid[0].clone(),
        argmax_u: grid[0].clone(),
    };
    for law in betas {
        if law.beta < b.beta_min {
            b.beta_min = law.beta;
            b.argmin_u = law.u.clone();
        }
        if law.beta > b.beta_max {
            b.beta_max = law.beta;
            b.argmax_u = law.u;
        }
    }
    Ok(b)
}

/// Directional laws for every direction of `dirs`, evaluated in parallel.
pub fn beta_map(spec: &StableSpec, dirs: &[Vec<f64>], quad: &HemisphereQuad) -> Result<Vec<DirectionalLaw>> {
    dirs.par_iter()
        .map(|u| directional_law(spec, u, quad))
        .collect()
}

fn check_direction(spec: &StableSpec, u: &[f64]) -> Result<()> {
    if u.len() != spec.dim() {
        return invalid("direction has wrong dimension");
    }
    check_unit(u, 1e-12)
}

/// Angular panels on [0, π/2] graded toward the equator. The last panel is
/// returned separately because it carries the ⟨u,w⟩^α endpoint behavior.
fn equator_panels(levels: usize, extra: &[f64]) -> (Vec<(f64, f64)>, (f64, f64)) {
    let mut pts = graded_toward(0.0, PI / 2.0, levels);
    let last = pts.len() - 2;
    let tail = (pts[last], pts[last + 1]);
    pts.truncate(last + 1);
    for &e in extra {
        if e > 0.0 && e < tail.0 {
            pts.push(e);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    (pts.windows(2).map(|w| (w[0], w[1])).collect(), tail)
}

/// ∫_0^{π/2} G(φ) cos^p φ dφ where G is smooth on the panels.
///
/// The final panel [π/2−h, π/2] is mapped by φ = π/2 − h·s^m, which turns
/// the (π/2−φ)^p endpoint behavior into a smooth s^{m(p+1)−1}.
fn to_equator<G: FnMut(f64) -> f64>(
    gl: &GaussLegendre,
    panels: &[(f64, f64)],
    tail: (f64, f64),
    p: f64,
    mut g: G,
) -> f64 {
    let mut s = 0.0;
    for &(a, b) in panels {
        for (phi, w) in gl.mapped(a, b) {
            s += w * g(phi) * phi.cos().powf(p);
        }
    }
    let h = tail.1 - tail.0;
    let m = (8.0 / (p + 1.0)).ceil().max(1.0);
    for (t, w) in gl.mapped(0.0, 1.0) {
        let sm = t.powf(m);
        let phi = PI / 2.0 - h * sm;
        let jac = h * m * t.powf(m - 1.0);
        s += w * jac * g(phi) * (h * sm).sin().powf(p);
    }
    s
}

/// Angles (relative to `u`) of the d = 2 table knots, folded into [0, π/2].
fn table_breaks(spec: &StableSpec, u: &[f64]) -> Vec<f64> {
    match &spec.theta.theta {
        Theta::Tabulated {
            angles: Some(a), ..
        } if spec.theta.dim == 2 => {
            // Tables with a rotation are handled without breaks.
            if !matches!(&spec.theta.theta, Theta::Tabulated { rotation: None, .. }) {
                return Vec::new();
            }
            let a0 = angle2(u);
            let mut out = Vec::new();
            for &t in a {
                let d = (t - a0 + PI).rem_euclid(2.0 * PI) - PI;
                out.push(d.abs());
            }
            out
        }
        _ => Vec::new(),
    }
}

fn hemisphere_once(spec: &StableSpec, u: &[f64], quad: &HemisphereQuad, order: usize, n_az: usize) -> f64 {
    let gl = GaussLegendre::new(order);
    let p = spec.alpha;
    let th = &spec.theta;
    match spec.dim() {
        2 => {
            let (panels, tail) = equator_panels(quad.grading_levels, &table_breaks(spec, u));
            let (c, s) = (u[0], u[1]);
            to_equator(&gl, &panels, tail, p, |phi| {
                let (cp, sp) = (phi.cos(), phi.sin());
                // w(±φ) = rotation of u by ±φ.
                let w1 = [c * cp - s * sp, s * cp + c * sp];
                let w2 = [c * cp + s * sp, s * cp - c * sp];
                th.eval(&w1) + th.eval(&w2)
            })
        }
        _ => {
            let (panels, tail) = equator_panels(quad.grading_levels, &[]);
            let basis = orthogonal_complement(u);
            let (e1, e2) = (&basis[0], &basis[1]);
            let dpsi = 2.0 * PI / n_az as f64;
            let trig: Vec<(f64, f64)> = (0..n_az)
                .map(|k| {
                    let psi = dpsi * k as f64;
                    (psi.cos(), psi.sin())
                })
                .collect();
            let mut w = [0.0; 3];
            to_equator(&gl, &panels, tail, p, |theta| {
                let (ct, st) = (theta.cos(), theta.sin());
                let mut acc = 0.0;
                for &(cp, sp) in &trig {
                    for i in 0..3 {
                        w[i] = ct * u[i] + st * (cp * e1[i] + sp * e2[i]);
                    }
                    acc += th.eval(&w);
                }
                acc * dpsi * st
            })
        }
    }
}

fn deterministic_c_plus(spec: &StableSpec, u: &[f64], quad: &HemisphereQuad) -> Result<Estimate> {
    let tol = quad.effective_tol(spec);
    let mut order = quad.order.max(2);
    let mut n_az = quad.azimuth_nodes.max(8);
    let mut coarse = hemisphere_once(spec, u, quad, order, n_az);
    let mut best = Estimate::new(coarse, f64::INFINITY);
    for _ in 0..=quad.max_refinements {
        order *= 2;
        n_az *= 2;
        let fine = hemisphere_once(spec, u, quad, order, n_az);
        best = Estimate::new(fine, (fine - coarse).abs());
        if best.err <= tol * fine.abs() {
            return Ok(best);
        }
        coarse = fine;
    }
    Err(Error::NumericFailure {
        what: "hemisphere quadrature did not converge".into(),
        best: best.value,
        achieved: best.err / best.value.abs(),
    })
}

/// Randomly shifted Halton estimates of (C⁺(u), C⁻(u)) from the same points.
fn qmc_constants(spec: &StableSpec, u: &[f64], quad: &HemisphereQuad) -> Result<(Estimate, Estimate)> {
    let d = spec.dim();
    if d > 16 {
        return invalid("QMC hemisphere quadrature supports d <= 16");
    }
    let k = quad.qmc_shifts.max(2);
    let area = sphere_area(d);
    let mut rng = ChaCha8Rng::seed_from_u64(quad.seed);
    let mut plus = Vec::with_capacity(k);
    let mut minus = Vec::with_capacity(k);
    for _ in 0..k {
        let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let (mut sp, mut sm) = (0.0, 0.0);
        for i in 0..quad.qmc_points as u64 {
            let w = cube_to_sphere(&halton_point(i, d, &shift));
            let c = dot(&w, u);
            let v = spec.theta.eval(&w);
            if c > 0.0 {
                sp += v * c.powf(spec.alpha);
            } else if c < 0.0 {
                sm += v * (-c).powf(spec.alpha);
            }
        }
        plus.push(area * sp / quad.qmc_points as f64);
        minus.push(area * sm / quad.qmc_points as f64);
    }
    Ok((mean_se(&plus), mean_se(&minus)))
}

fn mean_se(x: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    Estimate::new(m, (v / n).sqrt())
}

/// Total mass ∫_{S^{d-1}} ϑ(w) dw (= C⁺ + C⁻ at α = 0).
pub fn theta_mass(spec: &StableSpec, quad: &HemisphereQuad) -> Result<f64> {
    let mut s = spec.clone();
    // The hemisphere rule is exact for p = 0 as well.
    s.alpha = 1e-300;
    let u = crate::linalg::unit(spec.dim(), 0);
    let a = c_plus(&s, &u, quad)?.value;
    let b = c_plus(&s, &neg(&u), quad)?.value;
    Ok(a + b)
}

/// A precomputed, smooth interpolant of u ↦ β(u) with its tangential
/// gradient, used to evaluate δ_D(x)^{β(n(x))} quickly.
#[derive(Debug, Clone)]
pub enum BetaField {
    Constant(f64),
    /// Periodic Catmull–Rom spline in the angle, uniform knots.
    Circle { values: Vec<f64> },
    /// Two latitude–longitude charts with bicubic Catmull–Rom interpolation.
    /// Chart A has pole e3 and serves |w3| ≤ 0.8; chart B has pole e1.
    Sphere { a: Chart, b: Chart },
}

#[derive(Debug, Clone)]
pub struct Chart {
    theta0: f64,
    dtheta: f64,
    n_theta: usize,
    n_phi: usize,
    values: Vec<f64>,
}

const SPHERE_SPLIT: f64 = 0.8;

impl BetaField {
    /// Tabulates β. `resolution` is the number of knots around a great circle.
    pub fn new(spec: &StableSpec, quad: &HemisphereQuad, resolution: usize) -> Result<Self> {
        match spec.dim() {
            2 => {
                let n = resolution.max(16);
                let dirs: Vec<Vec<f64>> = (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect();
                let values = beta_map(spec, &dirs, quad)?.into_iter().map(|l| l.beta).collect();
                Ok(BetaField::Circle { values })
            }
            3 => {
                let n_phi = resolution.max(16);
                let dth = 2.0 * PI / n_phi as f64;
                let a_lo = SPHERE_SPLIT.acos();
                let b_lo = (1.0 - SPHERE_SPLIT * SPHERE_SPLIT).sqrt().acos();
                let a = Chart::build(spec, quad, a_lo - 3.0 * dth, PI - a_lo + 3.0 * dth, n_phi, false)?;
                let b = Chart::build(spec, quad, b_lo - 3.0 * dth, PI - b_lo + 3.0 * dth, n_phi, true)?;
                Ok(BetaField::Sphere { a, b })
            }
            _ => invalid("beta tables support d = 2 or 3"),
        }
    }

    /// β(w) and its tangential gradient on the sphere at `w`.
    pub fn eval(&self, w: &[f64]) -> (f64, Vec<f64>) {
        match self {
            BetaField::Constant(b) => (*b, vec![0.0; w.len()]),
            BetaField::Circle { values } => {
                let n = values.len();
                let t = angle2(w);
                let x = t / (2.0 * PI) * n as f64;
                let i = x.floor();
                let s = x - i;
                let i = i as isize;
                let g = |k: isize| values[k.rem_euclid(n as isize) as usize];
                let (v, dv) = catmull_rom(g(i - 1), g(i), g(i + 1), g(i + 2), s);
                let dbdt = dv * n as f64 / (2.0 * PI);
                (v, vec![-t.sin() * dbdt, t.cos() * dbdt])
            }
            BetaField::Sphere { a, b } => {
                if w[2].abs() <= SPHERE_SPLIT {
                    a.eval(w)
                } else {
                    // Chart B coordinates: (w2, w3, w1).
                    let p = [w[1], w[2], w[0]];
                    let (v, g) = b.eval(&p);
                    (v, vec![g[2], g[0], g[1]])
                }
            }
        }
    }
}

impl Chart {
    fn build(
        spec: &StableSpec,
        quad: &HemisphereQuad,
        lo: f64,
        hi: f64,
        n_phi: usize,
        permuted: bool,
    ) -> Result<Self> {
        let dtheta = 2.0 * PI / n_phi as f64;
        let n_theta = ((hi - lo) / dtheta).ceil() as usize + 1;
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            let th = lo + dtheta * i as f64;
            for j in 0..n_phi {
                let ph = dtheta * j as f64;
                let p = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                let w = if permuted { vec![p[2], p[0], p[1]] } else { p.to_vec() };
                dirs.push(w);
            }
        }
        let values = beta_map(spec, &dirs, quad)?.into_iter().map(|l| l.beta).collect();
        Ok(Self {
            theta0: lo,
            dtheta,
            n_theta,
            n_phi,
            values,
        })
    }

    /// Value and gradient in the chart's own coordinates.
    fn eval(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let th = w[2].clamp(-1.0, 1.0).acos();
        let ph = angle2(w);
        let x = ((th - self.theta0) / self.dtheta).clamp(1.0, self.n_theta as f64 - 2.0 - 1e-12);
        let i = x.floor();
        let s = x - i;
        let i = i as usize;
        let y = ph / self.dtheta;
        let j = y.floor();
        let t = y - j;
        let j = j as isize;
        let np = self.n_phi as isize;
        let at = |a: usize, b: isize| self.values[a * self.n_phi + b.rem_euclid(np) as usize];
        let mut rows = [(0.0, 0.0); 4];
        for (k, row) in rows.iter_mut().enumerate() {
            let a = i + k - 1;
            *row = catmull_rom(at(a, j - 1), at(a, j), at(a, j + 1), at(a, j + 2), t);
        }
        let (v, dv_ds) = catmull_rom(rows[0].0, rows[1].0, rows[2].0, rows[3].0, s);
        let (dv_dt, _) = catmull_rom(rows[0].1, rows[1].1, rows[2].1, rows[3].1, s);
        let b_th = dv_ds / self.dtheta;
        let b_ph = dv_dt / self.dtheta;
        let (st, ct) = (th.sin(), th.cos());
        let (sp, cp) = (ph.sin(), ph.cos());
        let e_th = [ct * cp, ct * sp, -st];
        let e_ph = [-sp, cp, 0.0];
        let inv = 1.0 / st.max(1e-300);
        let g = (0..3).map(|k| b_th * e_th[k] + b_ph * inv * e_ph[k]).collect();
        (v, g)
    }
}

/// Catmull–Rom cubic on [p1, p2] at fraction s, with d/ds.
fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, s: f64) -> (f64, f64) {
    let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
    let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    let c = -0.5 * p0 + 0.5 * p2;
    let v = ((a * s + b) * s + c) * s + p1;
    let dv = (3.0 * a * s + 2.0 * b) * s + c;
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn wallis(alpha: f64) -> f64 {
        PI.sqrt() * gamma((alpha + 1.0) / 2.0) / gamma(alpha / 2.0 + 1.0)
    }

    #[test]
    fn wallis_oracle() {
        let q = HemisphereQuad::default();
        for a in [0.3, 0.5, 1.0, 1.5, 1.9] {
            let s = StableSpec::isotropic(a, 2).unwrap();
            let c = c_plus(&s, &[0.6, 0.8], &q).unwrap();
            assert!((c.value - wallis(a)).abs() < 1e-12, "{a} {}", c.value);
        }
    }

    #[test]
    fn isotropic_sphere_oracle() {
        // d = 3, ϑ ≡ 1: ∫ cos^α θ sin θ dθ dψ = 2π/(α+1).
        let q = HemisphereQuad::default();
        for a in [0.4, 1.0, 1.7] {
            let s = StableSpec::isotropic(a, 3).unwrap();
            let u = crate::linalg::normalize(&[1.0, 2.0, 2.0]).unwrap();
            let c = c_plus(&s, &u, &q).unwrap();
            assert!((c.value - 2.0 * PI / (a + 1.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn beta_examples() {
        let q = HemisphereQuad::default();
        let s = StableSpec::isotropic(1.5, 2).unwrap();
        assert!((beta(&s, &[0.0, 1.0], &q).unwrap() - 0.75).abs() < 1e-12);
        let s = StableSpec::isotropic(1.0, 2).unwrap();
        assert!((beta(&s, &[1.0, 0.0], &q).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tilt_hand_values() {
        let q = HemisphereQuad::default();
        let s = StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![1.0, 0.0]).unwrap();
        let l = directional_law(&s, &[1.0, 0.0], &q).unwrap();
        assert!((l.c_plus - 2.467).abs() < 2e-3);
        assert!((l.c_minus - 1.029).abs() < 2e-3);
        assert!((l.beta - 0.6258).abs() < 1e-3);
        assert!(l.c_minus < l.c_plus);
    }

    #[test]
    fn qmc_in_four_dimensions() {
        let q = HemisphereQuad::default();
        let s = StableSpec::isotropic(1.2, 4).unwrap();
        let l = directional_law(&s, &[0.0, 0.0, 0.0, 1.0], &q).unwrap();
        assert!((l.beta - 0.6).abs() < 5.0 * l.beta_err + 1e-6);
    }

    #[test]
    fn beta_field_matches_direct_values() {
        let q = HemisphereQuad::default();
        let s = StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![0.6, 0.8]).unwrap();
        let f = BetaField::new(&s, &q, 1024).unwrap();
        let t: f64 = 1.2345;
        let w = [t.cos(), t.sin()];
        let (b, g) = f.eval(&w);
        assert!((b - beta(&s, &w, &q).unwrap()).abs() < 1e-8);
        let h = 1e-6;
        let bp = beta(&s, &[(t + h).cos(), (t + h).sin()], &q).unwrap();
        let bm = beta(&s, &[(t - h).cos(), (t - h).sin()], &q).unwrap();
        let dt = (bp - bm) / (2.0 * h);
        let gt = -t.sin() * g[0] + t.cos() * g[1];
        assert!((gt - dt).abs() < 1e-5);
    }

    #[test]
    fn beta_field_sphere_matches_direct_values() {
        let q = HemisphereQuad {
            order: 8,
            azimuth_nodes: 32,
            tol: 1e-7,
            ..Default::default()
        };
        let s = StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![0.0, 0.6, 0.8]).unwrap();
        let f = BetaField::new(&s, &q, 64).unwrap();
        for w in [[0.6, 0.0, 0.8], [0.0, 0.28, 0.96], [0.48, 0.6, -0.64]] {
            let (b, _) = f.eval(&w);
            assert!((b - beta(&s, &w, &q).unwrap()).abs() < 1e-4);
        }
    }
}
