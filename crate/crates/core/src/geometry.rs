//! C^{1,1} domains: distance to the complement, nearest boundary point,
//! inward normal, and the normalized boundary frame.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{add, axpy, check_unit, dot, norm, normalize, rotation_to_last_axis, scale, sub, Matrix};

use std::f64::consts::PI;

const NEWTON_CAP: usize = 64;
const NEWTON_TOL: f64 = 1e-12;

/// Domain parameters. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    /// {x : ⟨x − point, normal⟩ > 0} with `normal` the inward unit normal.
    HalfSpace { point: Vec<f64>, normal: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// {x : Σ (⟨x − center, axes_i⟩ / semi_axes_i)² < 1}. `axes` defaults
    /// to the coordinate axes and must be orthonormal rows.
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axes: Option<Vec<Vec<f64>>>,
    },
    /// Planar star domain with boundary radius R(θ) = radius·(1 + amplitude·cos(frequency·(θ − phase))).
    PerturbedBall {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
        frequency: u32,
        #[serde(default)]
        phase: f64,
    },
}

/// A domain with certified uniform interior and exterior ball radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Shape", into = "Shape")]
pub struct DomainGeometry {
    pub shape: Shape,
    pub interior_ball_r: f64,
    pub exterior_ball_r: f64,
    axes: Option<Matrix>,
}

impl TryFrom<Shape> for DomainGeometry {
    type Error = Error;
    fn try_from(s: Shape) -> Result<Self> {
        DomainGeometry::new(s)
    }
}

impl From<DomainGeometry> for Shape {
    fn from(d: DomainGeometry) -> Shape {
        d.shape
    }
}

impl DomainGeometry {
    pub fn new(shape: Shape) -> Result<Self> {
        let mut axes = None;
        let (r_in, r_ex) = match &shape {
            Shape::HalfSpace { point, normal } => {
                if point.len() != normal.len() || point.len() < 2 {
                    return invalid("half-space point and normal must share a dimension >= 2");
                }
                check_unit(normal, 1e-12)?;
                (f64::INFINITY, f64::INFINITY)
            }
            Shape::Ball { center, radius } => {
                if center.len() < 2 || !(*radius > 0.0 && radius.is_finite()) {
                    return invalid("ball needs dim >= 2 and a positive radius");
                }
                (*radius, f64::INFINITY)
            }
            Shape::Ellipsoid {
                center,
                semi_axes,
                axes: ax,
            } => {
                let d = center.len();
                if d < 2 || semi_axes.len() != d || semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                    return invalid("ellipsoid needs positive semi-axes matching the center");
                }
                let m = match ax {
                    Some(rows) => {
                        let m = Matrix::from_rows(rows)?;
                        let p = m.mul(&m.transpose());
                        for i in 0..d {
                            for j in 0..d {
                                let want = if i == j { 1.0 } else { 0.0 };
                                if m.n != d || (p.get(i, j) - want).abs() > 1e-10 {
                                    return invalid("ellipsoid axes must be orthonormal rows");
                                }
                            }
                        }
                        m
                    }
                    None => Matrix::identity(d),
                };
                axes = Some(m);
                let amin = semi_axes.iter().copied().fold(f64::INFINITY, f64::min);
                let amax = semi_axes.iter().copied().fold(0.0, f64::max);
                (amin * amin / amax, f64::INFINITY)
            }
            Shape::PerturbedBall {
                center,
                radius,
                amplitude,
                frequency,
                ..
            } => {
                if center.len() != 2 {
                    return invalid("perturbed ball is planar (d = 2)");
                }
                let k2 = (*frequency as f64).powi(2);
                if !(*radius > 0.0) || amplitude.abs() * k2 > 0.1 || amplitude.abs() >= 0.5 {
                    return invalid("perturbed ball needs |a|·k² <= 0.1");
                }
                let kmax = perturbed_max_curvature(*radius, *amplitude, *frequency as f64);
                let (kpos, kneg) = kmax;
                let r_in = 0.9 / kpos;
                let r_ex = if kneg > 0.0 { 0.9 / kneg } else { f64::INFINITY };
                (r_in, r_ex)
            }
        };
        Ok(Self {
            shape,
            interior_ball_r: r_in,
            exterior_ball_r: r_ex,
            axes,
        })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(Shape::Ball { center, radius })
    }

    pub fn half_space(point: Vec<f64>, normal: Vec<f64>) -> Result<Self> {
        Self::new(Shape::HalfSpace { point, normal })
    }

    /// The upper half-space {x_d > 0}.
    pub fn upper_half_space(dim: usize) -> Self {
        let mut n = vec![0.0; dim];
        n[dim - 1] = 1.0;
        Self::half_space(vec![0.0; dim], n).expect("valid half-space")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("domain JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("domain serializes")
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::HalfSpace { point, .. } => point.len(),
            Shape::Ball { center, .. } | Shape::Ellipsoid { center, .. } | Shape::PerturbedBall { center, .. } => {
                center.len()
            }
        }
    }

    /// Width of the collar in which z(x) and n(x) are unique.
    pub fn collar(&self) -> f64 {
        0.99 * self.interior_ball_r.min(self.exterior_ball_r)
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.shape, Shape::HalfSpace { .. })
    }

    /// Center and radius of a ball containing the domain (bounded kinds).
    pub fn bounding_ball(&self) -> Option<(Vec<f64>, f64)> {
        match &self.shape {
            Shape::HalfSpace { .. } => None,
            Shape::Ball { center, radius } => Some((center.clone(), *radius)),
            Shape::Ellipsoid { center, semi_axes, .. } => {
                Some((center.clone(), semi_axes.iter().copied().fold(0.0, f64::max)))
            }
            Shape::PerturbedBall {
                center,
                radius,
                amplitude,
                ..
            } => Some((center.clone(), radius * (1.0 + amplitude.abs()))),
        }
    }

    /// Membership in the open domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::HalfSpace { point, normal } => dot(&sub(x, point), normal) > 0.0,
            Shape::Ball { center, radius } => dist2(x, center) < radius * radius,
            Shape::Ellipsoid { center, semi_axes, .. } => {
                let y = self.ellipsoid_local(x, center);
                y.iter().zip(semi_axes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>() < 1.0
            }
            Shape::PerturbedBall { center, .. } => {
                let y = sub(x, center);
                let t = y[1].atan2(y[0]);
                norm(&y) < self.perturbed_radius(t).0
            }
        }
    }

    /// Distance from `x` to the complement; zero outside.
    pub fn delta(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return invalid("point has wrong dimension");
        }
        match &self.shape {
            Shape::HalfSpace { point, normal } => Ok(dot(&sub(x, point), normal).max(0.0)),
            Shape::Ball { center, radius } => Ok((radius - norm(&sub(x, center))).max(0.0)),
            _ => {
                if !self.contains(x) {
                    return Ok(0.0);
                }
                Ok(norm(&sub(x, &self.closest_point(x)?)))
            }
        }
    }

    /// Distance to the complement that never fails: exact where the closed
    /// form or Newton succeeds, otherwise a guaranteed lower bound.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match self.delta(x) {
            Ok(d) => d,
            Err(_) => self.depth_lower_bound(x),
        }
    }

    fn depth_lower_bound(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match &self.shape {
            Shape::Ellipsoid { center, semi_axes, .. } => {
                let y = self.ellipsoid_local(x, center);
                let s = y.iter().zip(semi_axes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>().sqrt();
                let amin = semi_axes.iter().copied().fold(f64::INFINITY, f64::min);
                (1.0 - s) * amin
            }
            Shape::PerturbedBall {
                center,
                radius,
                amplitude,
                ..
            } => {
                // The disk of radius R0(1 − |a|) lies inside the domain.
                (radius * (1.0 - amplitude.abs()) - norm(&sub(x, center))).max(0.0)
            }
            _ => 0.0,
        }
    }

    /// Nearest boundary point z(x) and inward normal n(x) for x in the collar.
    pub fn nearest_boundary(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.dim() {
            return invalid("point has wrong dimension");
        }
        if !self.contains(x) {
            return Err(Error::DomainError("point is not in the open domain".into()));
        }
        let d = self.delta(x)?;
        if d >= self.collar() {
            return Err(Error::DomainError(format!(
                "point at depth {d} is outside the collar of width {}",
                self.collar()
            )));
        }
        match &self.shape {
            Shape::HalfSpace { normal, .. } => Ok((axpy(x, -d, normal), normal.clone())),
            Shape::Ball { center, radius } => {
                let n = normalize(&sub(center, x))?;
                Ok((axpy(center, -radius, &n), n))
            }
            _ => {
                let z = self.closest_point(x)?;
                let n = self.normal_at(&z)?;
                Ok((z, n))
            }
        }
    }

    /// Inward unit normal at a boundary point.
    pub fn normal_at(&self, z: &[f64]) -> Result<Vec<f64>> {
        match &self.shape {
            Shape::HalfSpace { normal, .. } => Ok(normal.clone()),
            Shape::Ball { center, .. } => normalize(&sub(center, z)),
            Shape::Ellipsoid { center, semi_axes, .. } => {
                let y = self.ellipsoid_local(z, center);
                let g: Vec<f64> = y.iter().zip(semi_axes).map(|(v, a)| -v / (a * a)).collect();
                normalize(&self.axes.as_ref().expect("axes").apply_t(&g))
            }
            Shape::PerturbedBall { center, .. } => {
                let y = sub(z, center);
                let t = y[1].atan2(y[0]);
                let (r, dr, _) = self.perturbed_radius(t);
                // Outward normal of the polar curve is ∝ r e − r' e⊥.
                let (c, s) = (t.cos(), t.sin());
                let out = [r * c + dr * s, r * s - dr * c];
                normalize(&[-out[0], -out[1]])
            }
        }
    }

    /// Signed residual of the boundary equation (zero on ∂D).
    pub fn boundary_residual(&self, z: &[f64]) -> f64 {
        match &self.shape {
            Shape::HalfSpace { point, normal } => dot(&sub(z, point), normal),
            Shape::Ball { center, radius } => norm(&sub(z, center)) - radius,
            Shape::Ellipsoid { center, semi_axes, .. } => {
                let y = self.ellipsoid_local(z, center);
                let s: f64 = y.iter().zip(semi_axes).map(|(v, a)| (v / a) * (v / a)).sum();
                s.sqrt() - 1.0
            }
            Shape::PerturbedBall { center, .. } => {
                let y = sub(z, center);
                norm(&y) - self.perturbed_radius(y[1].atan2(y[0])).0
            }
        }
    }

    /// Jacobian ∂n(x)/∂x of the normal field in the collar.
    pub fn normal_jacobian(&self, x: &[f64]) -> Result<Matrix> {
        let d = self.dim();
        match &self.shape {
            Shape::HalfSpace { .. } => Ok(Matrix { n: d, data: vec![0.0; d * d] }),
            Shape::Ball { center, .. } => {
                let v = sub(center, x);
                let r = norm(&v);
                let n = scale(&v, 1.0 / r);
                let mut m = Matrix::identity(d);
                for i in 0..d {
                    for j in 0..d {
                        m.data[i * d + j] = -(m.data[i * d + j] - n[i] * n[j]) / r;
                    }
                }
                Ok(m)
            }
            _ => {
                // Fourth-order central differences of the normal map.
                let h = 1e-4 * self.collar().min(1.0);
                let mut m = Matrix { n: d, data: vec![0.0; d * d] };
                for j in 0..d {
                    let mut cols = Vec::with_capacity(4);
                    for k in [-2.0, -1.0, 1.0, 2.0] {
                        let mut y = x.to_vec();
                        y[j] += k * h;
                        cols.push(self.nearest_boundary(&y)?.1);
                    }
                    for i in 0..d {
                        m.data[i * d + j] =
                            (cols[0][i] - 8.0 * cols[1][i] + 8.0 * cols[2][i] - cols[3][i]) / (12.0 * h);
                    }
                }
                Ok(m)
            }
        }
    }

    /// Distance along the ray x + r·w until it first leaves the domain
    /// (None if it never does). `x` must be inside.
    pub fn ray_exit(&self, x: &[f64], w: &[f64]) -> Option<f64> {
        match &self.shape {
            Shape::HalfSpace { point, normal } => {
                let c = dot(w, normal);
                if c < 0.0 {
                    Some(dot(&sub(x, point), normal).max(0.0) / -c)
                } else {
                    None
                }
            }
            Shape::Ball { center, radius } => Some(sphere_exit(&sub(x, center), w, *radius)),
            Shape::Ellipsoid { center, semi_axes, .. } => {
                let y = self.ellipsoid_local(x, center);
                let v = self.axes.as_ref().expect("axes").apply(w);
                let ys: Vec<f64> = y.iter().zip(semi_axes).map(|(a, s)| a / s).collect();
                let vs: Vec<f64> = v.iter().zip(semi_axes).map(|(a, s)| a / s).collect();
                let a = dot(&vs, &vs);
                let b = dot(&ys, &vs);
                let c = dot(&ys, &ys) - 1.0;
                let disc = (b * b - a * c).max(0.0);
                // Stable root of a r² + 2 b r + c = 0 with c ≤ 0.
                let q = -(b + b.signum() * disc.sqrt());
                let r = if b >= 0.0 { c / q } else { q / a };
                Some(r.max(0.0))
            }
            Shape::PerturbedBall { .. } => {
                let (_, big) = self.bounding_ball().expect("bounded");
                let (lo, hi) = (0.0, 4.0 * big + norm(x));
                Some(bisect_exit(|r| self.contains(&axpy(x, r, w)), lo, hi))
            }
        }
    }

    /// Normalized frame at boundary point `z`.
    pub fn boundary_frame(&self, z: &[f64]) -> Result<BoundaryFrame> {
        if z.len() != self.dim() {
            return invalid("boundary point has wrong dimension");
        }
        let res = self.boundary_residual(z);
        if res.abs() > 1e-10 {
            return invalid(format!("point is not on the boundary (residual {res:e})"));
        }
        let n = self.normal_at(z)?;
        let q = rotation_to_last_axis(&n);
        let r = self.interior_ball_r.min(self.exterior_ball_r);
        let s = (2.0 / r).max(1.0);
        Ok(BoundaryFrame {
            z: z.to_vec(),
            n,
            rotation: q,
            scale: s,
        })
    }

    /// The same domain expressed in the frame's normalized coordinates.
    pub fn transformed(&self, f: &BoundaryFrame) -> Result<DomainGeometry> {
        let q = &f.rotation;
        let shape = match &self.shape {
            Shape::HalfSpace { point, normal } => Shape::HalfSpace {
                point: f.to_local(point),
                normal: q.apply(normal),
            },
            Shape::Ball { center, radius } => Shape::Ball {
                center: f.to_local(center),
                radius: radius * f.scale,
            },
            Shape::Ellipsoid { center, semi_axes, .. } => Shape::Ellipsoid {
                center: f.to_local(center),
                semi_axes: scale(semi_axes, f.scale),
                axes: Some(self.axes.as_ref().expect("axes").mul(&q.transpose()).rows()),
            },
            Shape::PerturbedBall {
                center,
                radius,
                amplitude,
                frequency,
                phase,
            } => Shape::PerturbedBall {
                center: f.to_local(center),
                radius: radius * f.scale,
                amplitude: *amplitude,
                frequency: *frequency,
                phase: phase + q.get(1, 0).atan2(q.get(0, 0)),
            },
        };
        DomainGeometry::new(shape)
    }

    /// Quasi-uniform points on the boundary (bounded kinds) or on a patch of
    /// the boundary around `point` (half-space).
    pub fn boundary_points(&self, n: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let dirs = crate::sphere::direction_grid(d, n);
        match &self.shape {
            Shape::HalfSpace { point, normal } => {
                let basis = crate::linalg::orthogonal_complement(normal);
                dirs.iter()
                    .enumerate()
                    .map(|(k, w)| {
                        let mut p = point.clone();
                        for (i, b) in basis.iter().enumerate() {
                            p = axpy(&p, w[i] * (k % 7) as f64, b);
                        }
                        p
                    })
                    .collect()
            }
            Shape::Ball { center, radius } => dirs.iter().map(|w| axpy(center, *radius, w)).collect(),
            Shape::Ellipsoid { center, semi_axes, .. } => dirs
                .iter()
                .map(|w| {
                    let s = norm(&w.iter().zip(semi_axes).map(|(v, a)| v / a).collect::<Vec<_>>());
                    let y = scale(w, 1.0 / s);
                    add(center, &self.axes.as_ref().expect("axes").apply_t(&y))
                })
                .collect(),
            Shape::PerturbedBall { center, .. } => dirs
                .iter()
                .map(|w| {
                    let t = w[1].atan2(w[0]);
                    axpy(center, self.perturbed_radius(t).0, w)
                })
                .collect(),
        }
    }

    fn ellipsoid_local(&self, x: &[f64], center: &[f64]) -> Vec<f64> {
        self.axes.as_ref().expect("axes").apply(&sub(x, center))
    }

    /// R(θ), R'(θ), R''(θ).
    fn perturbed_radius(&self, t: f64) -> (f64, f64, f64) {
        match &self.shape {
            Shape::PerturbedBall {
                radius,
                amplitude,
                frequency,
                phase,
                ..
            } => {
                let k = *frequency as f64;
                let a = k * (t - phase);
                (
                    radius * (1.0 + amplitude * a.cos()),
                    -radius * amplitude * k * a.sin(),
                    -radius * amplitude * k * k * a.cos(),
                )
            }
            _ => unreachable!("perturbed radius on a non-perturbed domain"),
        }
    }

    /// Closest boundary point by Newton iteration (ellipsoid, perturbed ball).
    fn closest_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.shape {
            Shape::Ellipsoid { center, semi_axes, .. } => {
                let y = self.ellipsoid_local(x, center);
                let zl = ellipsoid_closest(&y, semi_axes)?;
                Ok(add(center, &self.axes.as_ref().expect("axes").apply_t(&zl)))
            }
            Shape::PerturbedBall { center, .. } => {
                let y = sub(x, center);
                let t = self.perturbed_closest_angle(&y)?;
                let r = self.perturbed_radius(t).0;
                Ok(add(center, &[r * t.cos(), r * t.sin()]))
            }
            _ => unreachable!("closed forms handle the other kinds"),
        }
    }

    fn perturbed_closest_angle(&self, y: &[f64]) -> Result<f64> {
        let dist2_at = |t: f64| {
            let r = self.perturbed_radius(t).0;
            (y[0] - r * t.cos()).powi(2) + (y[1] - r * t.sin()).powi(2)
        };
        // Seed at the radial projection, then keep the best of a coarse scan.
        let seed = y[1].atan2(y[0]);
        let mut best = (dist2_at(seed), seed);
        let m = 256;
        for k in 0..m {
            let t = seed + 2.0 * PI * k as f64 / m as f64;
            let v = dist2_at(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        let h = 2.0 * PI / m as f64;
        let (lo, hi) = (best.1 - h, best.1 + h);
        let mut t = best.1;
        for _ in 0..NEWTON_CAP {
            let (r, dr, ddr) = self.perturbed_radius(t);
            let (c, s) = (t.cos(), t.sin());
            let p = [r * c, r * s];
            let p1 = [dr * c - r * s, dr * s + r * c];
            let p2 = [(ddr - r) * c - 2.0 * dr * s, (ddr - r) * s + 2.0 * dr * c];
            let e = [y[0] - p[0], y[1] - p[1]];
            let g = -2.0 * (e[0] * p1[0] + e[1] * p1[1]);
            let hss = 2.0 * (p1[0] * p1[0] + p1[1] * p1[1] - e[0] * p2[0] - e[1] * p2[1]);
            let step = if hss > 0.0 { g / hss } else { g.signum() * 0.25 * h };
            let next = (t - step).clamp(lo, hi);
            let moved = (next - t).abs();
            t = next;
            if moved < NEWTON_TOL * (1.0 + t.abs()) || g.abs() < NEWTON_TOL * r * r {
                return Ok(t);
            }
        }
        Err(Error::NumericFailure {
            what: "perturbed-ball projection did not converge".into(),
            best: t,
            achieved: f64::NAN,
        })
    }
}

/// Safeguarded Newton for the closest point of the ellipsoid Σ(z_i/a_i)² = 1
/// to an interior point y: z_i = a_i² y_i / (a_i² + t) with t the root in
/// (−a_min², 0] of F(t) = Σ (a_i y_i/(a_i² + t))² − 1.
fn ellipsoid_closest(y: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    let f = |t: f64| -> (f64, f64) {
        let mut v = -1.0;
        let mut dv = 0.0;
        for (yi, ai) in y.iter().zip(a) {
            let q = ai * yi / (ai * ai + t);
            v += q * q;
            dv += -2.0 * q * q / (ai * ai + t);
        }
        (v, dv)
    };
    let (im, am) = a
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let a2 = am * am;
    // F is convex and decreasing, so Newton from a point with F > 0 converges
    // monotonically from the left.
    let mut lo = (am * y[im].abs() - a2).max(-a2 * (1.0 - 1e-12));
    if f(lo).0 < 0.0 {
        lo = -a2 * (1.0 - 1e-12);
        if f(lo).0 < 0.0 {
            return Err(Error::DomainError(
                "ellipsoid projection is not unique at this point".into(),
            ));
        }
    }
    let mut t = lo;
    let mut hi = 0.0;
    if f(0.0).0 > 0.0 {
        return Err(Error::DomainError("point is outside the ellipsoid".into()));
    }
    for _ in 0..NEWTON_CAP {
        let (v, dv) = f(t);
        if v.abs() < NEWTON_TOL {
            return Ok(y.iter().zip(a).map(|(yi, ai)| ai * ai * yi / (ai * ai + t)).collect());
        }
        if v > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - v / dv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * (1.0 + t.abs()) {
            t = next;
            break;
        }
        t = next;
    }
    let (v, _) = f(t);
    if v.abs() < 1e-9 {
        return Ok(y.iter().zip(a).map(|(yi, ai)| ai * ai * yi / (ai * ai + t)).collect());
    }
    Err(Error::NumericFailure {
        what: "ellipsoid projection did not converge".into(),
        best: t,
        achieved: v.abs(),
    })
}

/// Largest positive curvature and largest negative curvature (as a positive
/// number) of the curve R(θ) = R0(1 + a cos kθ), sampled densely.
fn perturbed_max_curvature(r0: f64, a: f64, k: f64) -> (f64, f64) {
    let n = 8192;
    let (mut kp, mut kn) = (0.0f64, 0.0f64);
    for i in 0..n {
        let t = 2.0 * PI * i as f64 / n as f64;
        let r = r0 * (1.0 + a * (k * t).cos());
        let dr = -r0 * a * k * (k * t).sin();
        let ddr = -r0 * a * k * k * (k * t).cos();
        let kappa = (r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr).powf(1.5);
        kp = kp.max(kappa);
        kn = kn.max(-kappa);
    }
    // Sampling can miss the exact peak; pad by the grid spacing effect.
    (kp * 1.01, kn * 1.01)
}

/// Exit distance of the ray y + r·w from the ball |·| < R, y inside.
fn sphere_exit(y: &[f64], w: &[f64], radius: f64) -> f64 {
    let b = dot(y, w);
    let c = dot(y, y) - radius * radius;
    let disc = (b * b - c).max(0.0).sqrt();
    // Larger root of r² + 2br + c = 0, computed without cancellation.
    if b <= 0.0 {
        -b + disc
    } else {
        -c / (b + disc)
    }
}

/// Entry and exit distances of the line y + r·w through the sphere |·| = ρ,
/// if it meets it.
pub fn sphere_crossings(y: &[f64], w: &[f64], rho: f64) -> Option<(f64, f64)> {
    let b = dot(y, w);
    let c = dot(y, y) - rho * rho;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let q = -(b + b.signum() * s);
    let (r1, r2) = if q != 0.0 { (q, c / q) } else { (-s, s) };
    Some((r1.min(r2), r1.max(r2)))
}

/// Bisection for the first exit of a monotone membership along a ray.
pub fn bisect_exit<F: Fn(f64) -> bool>(inside: F, mut lo: f64, mut hi: f64) -> f64 {
    // March to find a bracket of the first exit.
    let n = 256;
    let h = (hi - lo) / n as f64;
    for i in 1..=n {
        let r = lo + h * i as f64;
        if !inside(r) {
            hi = r;
            lo = r - h;
            break;
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if inside(m) {
            lo = m;
        } else {
            hi = m;
        }
        if hi - lo < 1e-12 * (1.0 + hi) {
            break;
        }
    }
    hi
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Rotation plus dilation normalizing a domain at a boundary point: z maps
/// to the origin, n(z) to e_d, and the ball radii become at least 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFrame {
    pub z: Vec<f64>,
    pub n: Vec<f64>,
    pub rotation: Matrix,
    pub scale: f64,
}

impl BoundaryFrame {
    /// y = λ Q (x − z).
    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        scale(&self.rotation.apply(&sub(x, &self.z)), self.scale)
    }

    /// x = z + Qᵀ y / λ.
    pub fn to_global(&self, y: &[f64]) -> Vec<f64> {
        add(&self.z, &scale(&self.rotation.apply_t(y), 1.0 / self.scale))
    }
}

/// Largest value of |δ_D(x) − x_d| − ½|x̃|² over `grid`, with `grid` given in
/// the normalized frame at `z`. Nonpositive certifies the inequality.
pub fn check_odl2(dom: &DomainGeometry, z: &[f64], grid: &[Vec<f64>]) -> Result<f64> {
    let frame = dom.boundary_frame(z)?;
    let local = dom.transformed(&frame)?;
    let d = dom.dim();
    let mut worst = f64::NEG_INFINITY;
    for x in grid {
        let delta = local.delta(x)?;
        let tilde: f64 = x[..d - 1].iter().map(|v| v * v).sum();
        worst = worst.max((delta - x[d - 1]).abs() - 0.5 * tilde);
    }
    Ok(worst)
}

/// Regular grid of points of the closed normalized domain inside B(0, 1).
pub fn odl2_grid(local: &DomainGeometry, per_axis: usize) -> Vec<Vec<f64>> {
    let d = local.dim();
    let mut out = Vec::new();
    let total = per_axis.pow(d as u32);
    for idx in 0..total {
        let mut k = idx;
        let mut x = vec![0.0; d];
        for v in x.iter_mut() {
            *v = -1.0 + 2.0 * (k % per_axis) as f64 / (per_axis - 1) as f64;
            k /= per_axis;
        }
        if norm(&x) <= 1.0 && (local.contains(&x) || local.boundary_residual(&x).abs() < 1e-14) {
            out.push(x);
        }
    }
    out
}
