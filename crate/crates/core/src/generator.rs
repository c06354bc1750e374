//! Pointwise evaluation of the nonlocal generator
//!
//! 𝒜f(x) = ∫ (f(x+y) − f(x) − comp(x, y)) ν(y) dy (+ ⟨γ, ∇f(x)⟩ at α = 1)
//!
//! in polar coordinates y = r·w: an angular integral of ϑ(w) times a radial
//! integral along each ray.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{sphere_crossings, DomainGeometry, Shape};
use crate::linalg::{dot, norm, orthogonal_complement, scale, sub, unit, Matrix};
use crate::projection::{self, BetaField, HemisphereQuad};
use crate::quadrature::{adaptive, graded_panels, Estimate};
use crate::spectral::{angle2, StableSpec};
use crate::sphere::{direction_grid, sphere_area};

/// Quadrature settings for [`apply_generator`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorQuad {
    /// Radius separating the compensated inner integral from the outer one.
    /// `None` picks min(smoothness radius of f at x, 1)/2.
    pub r_split: Option<f64>,
    /// Lower bound on radial nodes per ray (the inner grading alone uses
    /// 15·inner_levels nodes).
    pub radial_nodes: usize,
    /// Cutoff beyond which bounded functions are handled by the analytic
    /// tail bound sup|f|·R^{-α}/α.
    pub outer_cutoff: f64,
    /// Requested absolute error.
    pub tol: f64,
    /// Geometric grading depth toward r = 0 (ratio 1/2).
    pub inner_levels: usize,
    /// Grading depth toward ray and angular break points.
    pub break_levels: usize,
    /// Azimuth trapezoid nodes (d = 3).
    pub azimuth_nodes: usize,
    /// Interval budget for each adaptive integral.
    pub max_intervals: usize,
    /// Truncation radius r of the compensator 1_{B(0,r)} at α = 1.
    pub alpha_one_radius: f64,
}

impl Default for GeneratorQuad {
    fn default() -> Self {
        Self {
            r_split: None,
            radial_nodes: 128,
            outer_cutoff: 1e3,
            tol: 1e-7,
            inner_levels: 24,
            break_levels: 24,
            azimuth_nodes: 32,
            max_intervals: 4000,
            alpha_one_radius: 1.0,
        }
    }
}

/// A generator value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorValue {
    pub value: f64,
    pub err_estimate: f64,
}

/// How a function behaves along a ray beyond the last break point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// f(x + r w) = 0 for r ≥ `from`.
    Zero { from: f64 },
    /// f(x + r w) = `value` for r ≥ `from`.
    Constant { from: f64, value: f64 },
    /// |f(x + r w)| ≤ coeff·(1 + r)^p with p < α.
    Growth { p: f64, coeff: f64 },
    /// |f| ≤ sup everywhere.
    Bounded { sup: f64 },
}

/// A point along a ray where f is not smooth. `singular` marks power-type
/// behavior (graded quadrature); otherwise a jump or kink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayBreak {
    pub r: f64,
    pub singular: bool,
}

/// Angular layout: a pole and the polar angles (from the pole) at which the
/// ray integral is not smooth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AngularStructure {
    pub pole: Option<Vec<f64>>,
    pub polar_breaks: Vec<f64>,
}

/// A function the generator can be applied to.
pub trait TestFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, y: &[f64]) -> f64;
    /// f(x + r w) − f0 with f0 = f(x); override to avoid cancellation.
    fn increment(&self, x: &[f64], w: &[f64], r: f64, f0: f64) -> f64 {
        let y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + r * b).collect();
        self.value(&y) - f0
    }
    /// Absolute rounding error of `increment` as r → 0. Zero when it keeps
    /// relative accuracy; otherwise the inner grading stops where this noise
    /// would dominate.
    fn increment_noise(&self, _x: &[f64], f0: f64) -> f64 {
        f64::EPSILON * f0.abs()
    }
    /// ∇f(x) where f is differentiable.
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>>;
    /// Radius of a ball around x on which f is smooth.
    fn smooth_radius(&self, x: &[f64]) -> f64;
    fn ray_breaks(&self, _x: &[f64], _w: &[f64]) -> Vec<RayBreak> {
        Vec::new()
    }
    fn tail(&self, x: &[f64], w: &[f64]) -> Tail;
    fn angular_structure(&self, _x: &[f64]) -> AngularStructure {
        AngularStructure::default()
    }
}

/// f ≡ c.
#[derive(Debug, Clone)]
pub struct ConstantFn {
    pub dim: usize,
    pub c: f64,
}

impl TestFunction for ConstantFn {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _y: &[f64]) -> f64 {
        self.c
    }
    fn increment_noise(&self, _x: &[f64], _f0: f64) -> f64 {
        0.0
    }
    fn increment(&self, _x: &[f64], _w: &[f64], _r: f64, _f0: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }
    fn smooth_radius(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }
    fn tail(&self, _x: &[f64], _w: &[f64]) -> Tail {
        Tail::Constant {
            from: 0.0,
            value: self.c,
        }
    }
}

/// height·exp(−|y − center|²/width²).
#[derive(Debug, Clone)]
pub struct GaussianBump {
    pub center: Vec<f64>,
    pub width: f64,
    pub height: f64,
}

impl GaussianBump {
    pub fn new(center: Vec<f64>, width: f64, height: f64) -> Self {
        Self {
            center,
            width,
            height,
        }
    }
}

/// Beyond this many widths the bump is below 1e-18 of its height.
const BUMP_SUPPORT: f64 = 6.5;

impl TestFunction for GaussianBump {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let d = sub(y, &self.center);
        self.height * (-dot(&d, &d) / (self.width * self.width)).exp()
    }
    fn increment_noise(&self, _x: &[f64], _f0: f64) -> f64 {
        0.0
    }
    fn increment(&self, x: &[f64], w: &[f64], r: f64, f0: f64) -> f64 {
        let d = sub(x, &self.center);
        let e = -(2.0 * r * dot(&d, w) + r * r) / (self.width * self.width);
        f0 * e.exp_m1()
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let f = self.value(x);
        let s2 = self.width * self.width;
        Some(x.iter().zip(&self.center).map(|(a, c)| -2.0 * (a - c) / s2 * f).collect())
    }
    fn smooth_radius(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }
    fn tail(&self, x: &[f64], _w: &[f64]) -> Tail {
        Tail::Zero {
            from: norm(&sub(x, &self.center)) + BUMP_SUPPORT * self.width,
        }
    }
    fn angular_structure(&self, x: &[f64]) -> AngularStructure {
        let d = sub(&self.center, x);
        let n = norm(&d);
        AngularStructure {
            pole: if n > 0.0 {
                Some(d.iter().map(|v| v / n).collect())
            } else {
                None
            },
            polar_breaks: Vec::new(),
        }
    }
}

/// h_{u,z}(y) = (⟨y − z, u⟩)_+^β.
#[derive(Debug, Clone)]
pub struct HalfspacePower {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub beta: f64,
}

impl HalfspacePower {
    fn height(&self, y: &[f64]) -> f64 {
        dot(&sub(y, &self.z), &self.u)
    }
}

impl TestFunction for HalfspacePower {
    fn dim(&self) -> usize {
        self.u.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let a = self.height(y);
        if a > 0.0 {
            a.powf(self.beta)
        } else {
            0.0
        }
    }
    fn increment_noise(&self, _x: &[f64], _f0: f64) -> f64 {
        0.0
    }
    fn increment(&self, x: &[f64], w: &[f64], r: f64, f0: f64) -> f64 {
        let a = self.height(x);
        let b = dot(w, &self.u);
        if a + r * b <= 0.0 {
            return -f0;
        }
        if a <= 0.0 {
            return (a + r * b).powf(self.beta) - f0;
        }
        f0 * (self.beta * (r * b / a).ln_1p()).exp_m1()
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let a = self.height(x);
        if a <= 0.0 {
            return None;
        }
        let s = self.beta * a.powf(self.beta - 1.0);
        Some(self.u.iter().map(|v| v * s).collect())
    }
    fn smooth_radius(&self, x: &[f64]) -> f64 {
        self.height(x).max(0.0)
    }
    fn ray_breaks(&self, x: &[f64], w: &[f64]) -> Vec<RayBreak> {
        let a = self.height(x);
        let b = dot(w, &self.u);
        if b < 0.0 && a > 0.0 {
            vec![RayBreak { r: a / -b, singular: true }]
        } else {
            Vec::new()
        }
    }
    fn tail(&self, x: &[f64], w: &[f64]) -> Tail {
        let a = self.height(x);
        let b = dot(w, &self.u);
        if b < 0.0 {
            Tail::Zero { from: a.max(0.0) / -b }
        } else if b == 0.0 {
            Tail::Constant {
                from: 0.0,
                value: self.value(x),
            }
        } else {
            Tail::Growth {
                p: self.beta,
                coeff: a.abs().max(1.0).powf(self.beta),
            }
        }
    }
    fn angular_structure(&self, _x: &[f64]) -> AngularStructure {
        AngularStructure {
            pole: Some(self.u.clone()),
            polar_breaks: vec![PI / 2.0],
        }
    }
}

/// g(y) = δ_D(y)^{β(n(y))} on the collar part {0 < δ_D < cut}, zero elsewhere.
/// Without a cut (half-spaces) g is the plain power of the distance.
#[derive(Debug, Clone)]
pub struct BoundaryPower {
    pub dom: DomainGeometry,
    pub field: BetaField,
    pub cut: Option<f64>,
}

impl BoundaryPower {
    pub fn new(dom: DomainGeometry, field: BetaField, cut: Option<f64>) -> Result<Self> {
        if let Some(c) = cut {
            if !(c > 0.0 && c < dom.collar()) {
                return invalid("cut must lie inside the collar");
            }
        } else if dom.is_bounded() {
            return invalid("bounded domains need a cut inside the collar");
        }
        Ok(Self { dom, field, cut })
    }

    fn normal(&self, y: &[f64]) -> Option<Vec<f64>> {
        match &self.dom.shape {
            Shape::HalfSpace { normal, .. } => Some(normal.clone()),
            Shape::Ball { center, .. } => {
                let v = sub(center, y);
                let n = norm(&v);
                (n > 0.0).then(|| v.iter().map(|a| a / n).collect())
            }
            _ => self.dom.nearest_boundary(y).ok().map(|p| p.1),
        }
    }

    fn beta_at(&self, y: &[f64]) -> f64 {
        match self.normal(y) {
            Some(n) => self.field.eval(&n).0,
            None => 0.0,
        }
    }

    /// Depth change δ(x + r w) − δ(x), without cancellation where possible.
    fn depth_change(&self, x: &[f64], w: &[f64], r: f64, dx: f64) -> Option<f64> {
        match &self.dom.shape {
            Shape::HalfSpace { normal, .. } => Some(r * dot(w, normal)),
            Shape::Ball { center, radius } => {
                let v = sub(x, center);
                let rx = norm(&v);
                let ry2 = dot(&v, &v) + 2.0 * r * dot(&v, w) + r * r;
                let ry = ry2.max(0.0).sqrt();
                if ry >= *radius {
                    return None;
                }
                Some(-(2.0 * r * dot(&v, w) + r * r) / (rx + ry))
            }
            _ => {
                let y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + r * b).collect();
                let d = self.dom.depth(&y);
                (d > 0.0).then_some(d - dx)
            }
        }
    }

    fn in_support(&self, d: f64) -> bool {
        d > 0.0 && self.cut.is_none_or(|c| d < c)
    }
}

impl TestFunction for BoundaryPower {
    fn dim(&self) -> usize {
        self.dom.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let d = self.dom.depth(y);
        if !self.in_support(d) {
            return 0.0;
        }
        d.powf(self.beta_at(y))
    }
    fn increment_noise(&self, x: &[f64], f0: f64) -> f64 {
        match self.field {
            BetaField::Constant(_) => 0.0,
            // β(n(y)) − β(n(x)) cancels to a few ulps of β, scaled by ln δ.
            _ => 4.0 * f64::EPSILON * f0.abs() * (1.0 + self.dom.depth(x).ln().abs()),
        }
    }
    fn increment(&self, x: &[f64], w: &[f64], r: f64, f0: f64) -> f64 {
        let dx = self.dom.depth(x);
        let Some(dd) = self.depth_change(x, w, r, dx) else {
            return -f0;
        };
        let dy = dx + dd;
        if !self.in_support(dy) {
            return -f0;
        }
        if !self.in_support(dx) {
            let y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + r * b).collect();
            return self.value(&y) - f0;
        }
        let y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + r * b).collect();
        let (bx, by) = (self.beta_at(x), self.beta_at(&y));
        let e = by * (dd / dx).ln_1p() + (by - bx) * dx.ln();
        f0 * e.exp_m1()
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.dom.depth(x);
        if !self.in_support(d) {
            return None;
        }
        let n = self.normal(x)?;
        let (b, tb) = self.field.eval(&n);
        let g = d.powf(b);
        let jac = self.dom.normal_jacobian(x).ok()?;
        let gb = jac.apply_t(&tb);
        Some((0..n.len()).map(|i| g * (b * n[i] / d + d.ln() * gb[i])).collect())
    }
    fn smooth_radius(&self, x: &[f64]) -> f64 {
        let d = self.dom.depth(x);
        match self.cut {
            Some(c) => d.min(c - d).max(0.0),
            None => d,
        }
    }
    fn ray_breaks(&self, x: &[f64], w: &[f64]) -> Vec<RayBreak> {
        let mut out = Vec::new();
        let exit = self.dom.ray_exit(x, w);
        if let Some(e) = exit {
            out.push(RayBreak { r: e, singular: true });
        }
        let Some(cut) = self.cut else { return out };
        match &self.dom.shape {
            Shape::HalfSpace { normal, point } => {
                let b = dot(w, normal);
                if b > 0.0 {
                    let a = dot(&sub(x, point), normal);
                    out.push(RayBreak { r: (cut - a) / b, singular: false });
                }
            }
            Shape::Ball { center, radius } => {
                if let Some((r1, r2)) = sphere_crossings(&sub(x, center), w, radius - cut) {
                    for r in [r1, r2] {
                        if r > 0.0 {
                            out.push(RayBreak { r, singular: false });
                        }
                    }
                }
            }
            _ => {
                let end = exit.unwrap_or(0.0);
                let n = 64;
                let dx = self.dom.depth(x) - cut;
                let mut prev = (0.0, dx);
                for k in 1..=n {
                    let r = end * k as f64 / n as f64;
                    let y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + r * b).collect();
                    let v = self.dom.depth(&y) - cut;
                    if (v > 0.0) != (prev.1 > 0.0) {
                        let (mut lo, mut hi) = (prev.0, r);
                        for _ in 0..60 {
                            let m = 0.5 * (lo + hi);
                            let ym: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + m * b).collect();
                            if (self.dom.depth(&ym) - cut > 0.0) == (prev.1 > 0.0) {
                                lo = m;
                            } else {
                                hi = m;
                            }
                        }
                        out.push(RayBreak { r: 0.5 * (lo + hi), singular: false });
                    }
                    prev = (r, v);
                }
            }
        }
        out.sort_by(|a, b| a.r.total_cmp(&b.r));
        out
    }
    fn tail(&self, x: &[f64], w: &[f64]) -> Tail {
        if let Some(e) = self.dom.ray_exit(x, w) {
            return Tail::Zero { from: e };
        }
        // Half-space rays that never leave.
        if let Shape::HalfSpace { normal, point } = &self.dom.shape {
            let b = dot(w, normal);
            let a = dot(&sub(x, point), normal);
            if let Some(c) = self.cut {
                if b > 0.0 {
                    return Tail::Zero { from: (c - a) / b };
                }
            }
            if b == 0.0 {
                return Tail::Constant {
                    from: 0.0,
                    value: self.value(x),
                };
            }
            let p = self.beta_at(x);
            return Tail::Growth {
                p,
                coeff: a.max(1.0).powf(p),
            };
        }
        Tail::Bounded { sup: 1.0 }
    }
    fn angular_structure(&self, x: &[f64]) -> AngularStructure {
        let mut breaks = vec![PI / 2.0];
        if let (Some(c), Shape::Ball { center, radius }) = (self.cut, &self.dom.shape) {
            let rx = norm(&sub(x, center));
            let inner = radius - c;
            if inner > 0.0 && rx > inner {
                breaks.push((inner / rx).asin());
            }
        }
        breaks.sort_by(f64::total_cmp);
        AngularStructure {
            pole: self.normal(x),
            polar_breaks: breaks,
        }
    }
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A smooth bounded function given by closures.
pub struct CustomFn {
    pub dim: usize,
    pub value: ValueFn,
    pub gradient: GradFn,
    /// Bound on sup|f|, used for the tail beyond the outer cutoff.
    pub sup: f64,
}

impl TestFunction for CustomFn {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, y: &[f64]) -> f64 {
        (self.value)(y)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some((self.gradient)(x))
    }
    fn smooth_radius(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }
    fn tail(&self, _x: &[f64], _w: &[f64]) -> Tail {
        Tail::Bounded { sup: self.sup }
    }
}

struct RayCtx<'a> {
    alpha: f64,
    f: &'a dyn TestFunction,
    x: &'a [f64],
    f0: f64,
    grad: Option<&'a [f64]>,
    r_split: f64,
    quad: &'a GeneratorQuad,
    tol: f64,
}

impl RayCtx<'_> {
    /// Radial integral along direction w, with its error estimate.
    fn integrate(&self, w: &[f64]) -> Estimate {
        let a = self.alpha;
        let (f, x, f0) = (self.f, self.x, self.f0);
        let rs = self.r_split;
        let gw = self.grad.map(|g| dot(g, w));
        let mut levels = self.quad.inner_levels;
        let noise = f.increment_noise(x, f0);
        if noise > 0.0 {
            // Rounding in the increment contributes about noise·r^{−α}.
            let floor = (200.0 * noise / self.tol).powf(1.0 / a);
            if floor > 0.0 {
                let l = (rs / floor).log2().floor().max(4.0) as usize;
                levels = levels.min(l);
            }
        }

        // Inner part: compensated integrand on panels graded toward 0.
        let c = gw.unwrap_or(0.0);
        let inner = |r: f64| (f.increment(x, w, r, f0) - c * r) * r.powf(-1.0 - a);
        let mut panels = Vec::with_capacity(levels);
        let mut hi = rs;
        for _ in 0..levels {
            panels.push((0.5 * hi, hi));
            hi *= 0.5;
        }
        let r0 = hi;
        let res = adaptive(&panels, 0.25 * self.tol, self.quad.max_intervals, inner);
        let mut total = res.est;
        // Remainder on [0, r0]: the integrand is q(r)·r^{p−1} with q linear to
        // leading order, fitted from r0 and 2r0.
        let p = if gw.is_some() { 2.0 - a } else { 1.0 - a };
        let qf = |r: f64| {
            if gw.is_some() {
                (f.increment(x, w, r, f0) - c * r) / (r * r)
            } else {
                f.increment(x, w, r, f0) / r
            }
        };
        // Newton interpolation of q on r0, 2r0, 4r0; the cubic term from 8r0
        // bounds the error, since |(r − r0)(r − 2r0)(r − 4r0)| ≤ 8r0³ on [0, r0].
        let (q1, q2, q4, q8) = (qf(r0), qf(2.0 * r0), qf(4.0 * r0), qf(8.0 * r0));
        let d1 = (q2 - q1) / r0;
        let d1b = (q4 - q2) / (2.0 * r0);
        let d1c = (q8 - q4) / (4.0 * r0);
        let d2 = (d1b - d1) / (3.0 * r0);
        let d2b = (d1c - d1b) / (6.0 * r0);
        let d3 = (d2b - d2) / (7.0 * r0);
        let i0 = r0.powf(p) / p;
        let i1 = r0.powf(p + 1.0) / (p + 1.0);
        let i2 = r0.powf(p + 2.0) / (p + 2.0);
        total.value += q1 * i0 + d1 * (i1 - r0 * i0) + d2 * (i2 - 3.0 * r0 * i1 + 2.0 * r0 * r0 * i0);
        total.err += 8.0 * (d3 * r0.powf(p + 3.0) / p).abs();
        total.err += 8.0 * noise * r0.powf(-a);

        // Compensator added back analytically.
        if let Some(g) = gw {
            total.value += if a < 1.0 {
                g * rs.powf(1.0 - a) / (1.0 - a)
            } else if a > 1.0 {
                -g * rs.powf(1.0 - a) / (a - 1.0)
            } else {
                -g * (self.quad.alpha_one_radius / rs).ln()
            };
        }

        // Outer part in v = ln r up to the end of the ray structure.
        let (end, tail) = match f.tail(x, w) {
            Tail::Zero { from } => {
                let e = from.max(rs);
                (e, Estimate::new(-f0 * e.powf(-a) / a, 0.0))
            }
            Tail::Constant { from, value } => {
                let e = from.max(rs);
                (e, Estimate::new((value - f0) * e.powf(-a) / a, 0.0))
            }
            Tail::Bounded { sup } => {
                let e = self.quad.outer_cutoff.max(2.0 * rs);
                (e, Estimate::new(-f0 * e.powf(-a) / a, sup * e.powf(-a) / a))
            }
            Tail::Growth { p, coeff } => {
                // Extend until coeff·2^p·R^{p−α}/(α−p) is negligible.
                let target = 1e-3 * self.tol;
                let k = coeff * 2f64.powf(p) / (a - p);
                let e = (k / target)
                    .powf(1.0 / (a - p))
                    .max(self.quad.outer_cutoff)
                    .min(1e200)
                    .max(2.0 * rs);
                let bound = k * e.powf(p - a);
                (e, Estimate::new(-f0 * e.powf(-a) / a, bound))
            }
        };
        total += tail;
        if end > rs {
            let breaks = f.ray_breaks(x, w);
            let mut knots: Vec<(f64, bool)> = vec![(rs.ln(), false)];
            let end_singular = breaks
                .iter()
                .any(|b| b.singular && (b.r - end).abs() <= 1e-12 * end);
            for b in &breaks {
                if b.r > rs * (1.0 + 1e-12) && b.r < end * (1.0 - 1e-12) {
                    knots.push((b.r.ln(), b.singular));
                }
            }
            knots.push((end.ln(), end_singular));
            let mut outer_panels = Vec::new();
            let n0 = (self.quad.radial_nodes / 32).max(1);
            for pair in knots.windows(2) {
                let ((va, sa), (vb, sb)) = (pair[0], pair[1]);
                if vb <= va {
                    continue;
                }
                if sa || sb {
                    outer_panels.extend(graded_panels(va, vb, sa, sb, self.quad.break_levels));
                } else {
                    let h = (vb - va) / n0 as f64;
                    outer_panels.extend((0..n0).map(|k| (va + h * k as f64, va + h * (k + 1) as f64)));
                }
            }
            let outer = |v: f64| {
                let r = v.exp();
                f.increment(x, w, r, f0) * (-a * v).exp()
            };
            let res = adaptive(&outer_panels, 0.5 * self.tol, self.quad.max_intervals, outer);
            total += res.est;
        }
        total
    }
}

/// Angular panels on a full circle with breaks at the given angles.
fn circle_panels(breaks: &[f64], levels: usize) -> Vec<(f64, f64)> {
    if breaks.is_empty() {
        return (0..8)
            .map(|k| (PI / 4.0 * k as f64, PI / 4.0 * (k + 1) as f64))
            .collect();
    }
    let mut b: Vec<f64> = breaks.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let start = b[0];
    let mut knots: Vec<f64> = b.iter().map(|t| t - start).collect();
    knots.push(2.0 * PI);
    let mut panels = Vec::new();
    for w in knots.windows(2) {
        if w[1] - w[0] > 1e-14 {
            panels.extend(graded_panels(w[0] + start, w[1] + start, true, true, levels));
        }
    }
    panels
}

/// 𝒜f(x) with an error estimate.
pub fn apply_generator(
    spec: &StableSpec,
    f: &dyn TestFunction,
    x: &[f64],
    quad: &GeneratorQuad,
) -> Result<GeneratorValue> {
    let d = spec.dim();
    if f.dim() != d || x.len() != d {
        return invalid("dimension mismatch between spec, function and point");
    }
    if d > 3 {
        return invalid("the generator quadrature supports d = 2 or 3");
    }
    if quad.radial_nodes < 128 || !(quad.tol > 0.0) {
        return invalid("generator quadrature needs radial_nodes >= 128 and tol > 0");
    }
    let a = spec.alpha;
    let f0 = f.value(x);
    if !f0.is_finite() {
        return invalid("function is not finite at x");
    }
    let grad = f.gradient(x);
    if a >= 1.0 && grad.is_none() {
        return invalid("gradient unavailable at x for alpha >= 1");
    }
    let r_split = match quad.r_split {
        Some(r) => r,
        None => 0.5 * f.smooth_radius(x).min(1.0),
    };
    if !(r_split > 0.0) || quad.outer_cutoff <= r_split {
        return invalid("need 0 < r_split < outer_cutoff");
    }
    let mass = theta_mass_bound(spec);
    let ctx = RayCtx {
        alpha: a,
        f,
        x,
        f0,
        grad: grad.as_deref(),
        r_split,
        quad,
        tol: 0.5 * quad.tol / mass,
    };
    let structure = f.angular_structure(x);
    let ang_tol = 0.5 * quad.tol;
    let worst_ray = std::sync::Mutex::new(0.0f64);
    let ray = |w: &[f64]| -> f64 {
        let e = ctx.integrate(w);
        let mut m = worst_ray.lock().expect("lock");
        *m = m.max(e.err);
        spec.theta.eval(w) * e.value
    };
    let (angular, extra_err) = if d == 2 {
        let pole = structure.pole.clone().unwrap_or_else(|| unit(2, 0));
        let p = angle2(&pole);
        let mut breaks = Vec::new();
        for &t in &structure.polar_breaks {
            breaks.push(p + t);
            breaks.push(p - t);
        }
        let panels = circle_panels(&breaks, quad.break_levels.min(16));
        let res = adaptive(&panels, ang_tol, quad.max_intervals, |t| ray(&[t.cos(), t.sin()]));
        (res.est, 0.0)
    } else {
        let pole = structure.pole.clone().unwrap_or_else(|| unit(3, 2));
        let basis = orthogonal_complement(&pole);
        let n_az = quad.azimuth_nodes.max(4) & !1;
        let az_err = std::sync::Mutex::new(0.0f64);
        let mut knots = vec![(0.0, false)];
        for &t in &structure.polar_breaks {
            if t > 0.0 && t < PI {
                knots.push((t, true));
                knots.push((PI - t, true));
            }
        }
        knots.push((PI, false));
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        knots.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-14);
        let mut panels = Vec::new();
        for w in knots.windows(2) {
            panels.extend(graded_panels(w[0].0, w[1].0, w[0].1, w[1].1, quad.break_levels.min(16)));
        }
        let res = adaptive(&panels, ang_tol, quad.max_intervals, |th| {
            let (ct, st) = (th.cos(), th.sin());
            let (mut full, mut half) = (0.0, 0.0);
            for k in 0..n_az {
                let ps = 2.0 * PI * k as f64 / n_az as f64;
                let (cp, sp) = (ps.cos(), ps.sin());
                let w: Vec<f64> = (0..3)
                    .map(|i| ct * pole[i] + st * (cp * basis[0][i] + sp * basis[1][i]))
                    .collect();
                let v = ray(&w);
                full += v;
                if k % 2 == 0 {
                    half += v;
                }
            }
            let full = full * 2.0 * PI / n_az as f64;
            let half = half * 4.0 * PI / n_az as f64;
            let mut m = az_err.lock().expect("lock");
            *m = m.max(((full - half) * st).abs());
            full * st
        });
        let e = *az_err.lock().expect("lock") * PI;
        (res.est, e)
    };
    let mut value = angular.value;
    if a == 1.0 {
        if let (Some(g), Some(gamma)) = (&grad, &spec.gamma) {
            value += dot(gamma, g);
        }
    }
    let ray_err = *worst_ray.lock().expect("lock") * mass;
    let err = angular.err + ray_err + extra_err;
    if !value.is_finite() || err > quad.tol {
        return Err(Error::NumericFailure {
            what: "generator quadrature did not reach the requested tolerance".into(),
            best: value,
            achieved: err,
        });
    }
    Ok(GeneratorValue {
        value,
        err_estimate: err,
    })
}

/// Upper bound on ∫ϑ over the sphere from a 2000-direction scan.
fn theta_mass_bound(spec: &StableSpec) -> f64 {
    let d = spec.dim();
    let max = direction_grid(d, 2000)
        .iter()
        .map(|w| spec.theta.eval(w))
        .fold(0.0, f64::max);
    1.1 * max * sphere_area(d)
}

/// Result of [`halfspace_harmonicity_scan`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicityScan {
    pub beta: f64,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<GeneratorValue>,
    pub max_abs: f64,
    /// 10·(sum of error estimates), the pass threshold.
    pub threshold: f64,
}

/// max |𝒜h_{u,0}| over the points, with h built from β(u).
pub fn halfspace_harmonicity_scan(
    spec: &StableSpec,
    u: &[f64],
    points: &[Vec<f64>],
    quad: &GeneratorQuad,
) -> Result<HarmonicityScan> {
    let b = projection::beta(spec, u, &HemisphereQuad::default())?;
    halfspace_scan_with_exponent(spec, u, points, quad, b)
}

/// As [`halfspace_harmonicity_scan`] with an explicit exponent (negative controls).
pub fn halfspace_scan_with_exponent(
    spec: &StableSpec,
    u: &[f64],
    points: &[Vec<f64>],
    quad: &GeneratorQuad,
    beta: f64,
) -> Result<HarmonicityScan> {
    let h = HalfspacePower {
        u: u.to_vec(),
        z: vec![0.0; spec.dim()],
        beta,
    };
    for p in points {
        if h.height(p) <= 0.0 {
            return invalid("scan points must lie strictly inside the half-space");
        }
    }
    let values: Vec<GeneratorValue> = points
        .par_iter()
        .map(|p| apply_generator(spec, &h, p, quad))
        .collect::<Result<_>>()?;
    let max_abs = values.iter().map(|v| v.value.abs()).fold(0.0, f64::max);
    let threshold = 10.0 * values.iter().map(|v| v.err_estimate).sum::<f64>();
    Ok(HarmonicityScan {
        beta,
        points: points.to_vec(),
        values,
        max_abs,
        threshold,
    })
}

/// The exponent field used to build g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentField {
    /// β(n(y)) from the projection module.
    Directional,
    /// β(−n(y)): the exponent of the dual process −X (diagnostics).
    Reflected,
    /// A constant exponent (negative controls).
    Constant(f64),
}

/// Result of [`g_boundedness_scan`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundednessScan {
    pub deltas: Vec<f64>,
    pub values: Vec<GeneratorValue>,
    /// Least-squares slope of log|𝒜g| against log δ.
    pub slope: f64,
}

/// Resolution of the β table behind g.
const FIELD_RESOLUTION_2D: usize = 4096;
const FIELD_RESOLUTION_3D: usize = 96;

/// Builds g = δ^{β(n(·))} for the domain normalized at boundary point `z`,
/// returning the normalized spec and the function.
pub fn boundary_power_at(
    spec: &StableSpec,
    dom: &DomainGeometry,
    z: &[f64],
    field: ExponentField,
) -> Result<(StableSpec, BoundaryPower)> {
    let frame = dom.boundary_frame(z)?;
    let spec_n = spec.rotated(&frame.rotation)?;
    let dom_n = dom.transformed(&frame)?;
    let hq = HemisphereQuad::default();
    let d = spec.dim();
    let table = match field {
        ExponentField::Constant(b) => BetaField::Constant(b),
        ExponentField::Directional | ExponentField::Reflected => {
            let source = if field == ExponentField::Reflected {
                spec_n.rotated(&Matrix::from_rows(
                    &(0..d).map(|i| scale(&unit(d, i), -1.0)).collect::<Vec<_>>(),
                )?)?
            } else {
                spec_n.clone()
            };
            if dom.is_bounded() {
                let res = if d == 2 { FIELD_RESOLUTION_2D } else { FIELD_RESOLUTION_3D };
                BetaField::new(&source, &hq, res)?
            } else {
                BetaField::Constant(projection::beta(&source, &unit(d, d - 1), &hq)?)
            }
        }
    };
    let cut = dom.is_bounded().then_some(1.0);
    let g = BoundaryPower::new(dom_n, table, cut)?;
    Ok((spec_n, g))
}

/// g in the original coordinates of `dom`. Bounded domains are cut at half
/// the collar, matching the normalized construction.
pub fn boundary_power(spec: &StableSpec, dom: &DomainGeometry) -> Result<BoundaryPower> {
    let hq = HemisphereQuad::default();
    let d = spec.dim();
    if dom.dim() != d {
        return invalid("spec and domain dimensions differ");
    }
    if dom.is_bounded() {
        let res = if d == 2 { FIELD_RESOLUTION_2D } else { FIELD_RESOLUTION_3D };
        BoundaryPower::new(dom.clone(), BetaField::new(spec, &hq, res)?, Some(0.5 * dom.collar()))
    } else {
        let Shape::HalfSpace { normal, .. } = &dom.shape else {
            return invalid("unbounded domains must be half-spaces");
        };
        let n = normal.clone();
        BoundaryPower::new(dom.clone(), BetaField::Constant(projection::beta(spec, &n, &hq)?), None)
    }
}

/// |𝒜g| at x_δ = δ·e_d in the normalized frame at `z`.
pub fn g_boundedness_scan(
    spec: &StableSpec,
    dom: &DomainGeometry,
    z: &[f64],
    deltas: &[f64],
    quad: &GeneratorQuad,
    field: ExponentField,
) -> Result<BoundednessScan> {
    if deltas.iter().any(|&t| !(t > 0.0 && t <= 0.5)) {
        return invalid("scan distances must lie in (0, 1/2]");
    }
    let (spec_n, g) = boundary_power_at(spec, dom, z, field)?;
    let d = spec.dim();
    let values: Vec<GeneratorValue> = deltas
        .par_iter()
        .map(|&t| {
            let mut x = vec![0.0; d];
            x[d - 1] = t;
            apply_generator(&spec_n, &g, &x, quad)
        })
        .collect::<Result<_>>()?;
    let lx: Vec<f64> = deltas.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.value.abs().max(1e-300).ln()).collect();
    let slope = ols_slope(&lx, &ly);
    Ok(BoundednessScan {
        deltas: deltas.to_vec(),
        values,
        slope,
    })
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
