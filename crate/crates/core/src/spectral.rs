//! The process class: spherical densities ϑ on S^{d-1} and full stable
//! process specifications with validation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{check_unit, dot, norm, Matrix};
use crate::sphere::direction_grid;

/// Validation grid size for positivity and symmetry checks.
pub const VALIDATION_GRID: usize = 10_000;
/// Symmetry tolerance at α = 1 for closed-form kinds.
pub const TOL_SYM_CLOSED: f64 = 1e-10;
/// Symmetry tolerance at α = 1 for tabulated kinds.
pub const TOL_SYM_TABULATED: f64 = 1e-6;
/// Distance from 1 below which an α ≠ 1 is rejected (tan pole).
pub const ALPHA_ONE_GAP: f64 = 1e-8;

/// Parameters of a spherical density. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Theta {
    /// ϑ ≡ c0.
    Constant { c0: f64 },
    /// ϑ(w) = c0 + c1⟨w, v⟩ with c0 > |c1| and |v| = 1.
    CosineTilt { c0: f64, c1: f64, v: Vec<f64> },
    /// ϑ(w) = floor + amplitude·exp(concentration·(⟨w, center⟩ − 1)), plus
    /// the mirrored bump at −center when `antipodal` is set.
    BumpPlusFloor {
        floor: f64,
        amplitude: f64,
        center: Vec<f64>,
        concentration: f64,
        #[serde(default)]
        antipodal: bool,
    },
    /// Gridded values. In d=2 `angles` (radians, increasing, within one
    /// period) with linear interpolation. In d=3 `polar` × `azimuth` with
    /// row-major `values` and piecewise-linear interpolation on the
    /// triangulated grid. `rotation`, if present, maps a query direction
    /// into the table's frame.
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angles: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        polar: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        azimuth: Option<Vec<f64>>,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
    },
}

/// A spherical density ϑ on S^{dim-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalDensity {
    pub dim: usize,
    pub theta: Theta,
    rotation: Option<Matrix>,
    table_min: f64,
}

impl SphericalDensity {
    /// Checks structural well-formedness (shapes, signs); positivity over the
    /// sphere is checked by [`StableSpec::validate`].
    pub fn new(dim: usize, theta: Theta) -> Result<Self> {
        if dim < 2 {
            return invalid(format!("dimension must be at least 2, got {dim}"));
        }
        let mut rotation = None;
        let mut table_min = 0.0;
        match &theta {
            Theta::Constant { c0 } => {
                if !(*c0 > 0.0 && c0.is_finite()) {
                    return invalid("constant density needs c0 > 0");
                }
            }
            Theta::CosineTilt { c0, c1, v } => {
                if v.len() != dim {
                    return invalid("tilt vector length must equal dim");
                }
                check_unit(v, 1e-12)?;
                if !(c0.is_finite() && c1.is_finite() && *c0 > c1.abs()) {
                    return invalid("cosine tilt needs c0 > |c1|");
                }
            }
            Theta::BumpPlusFloor {
                floor,
                amplitude,
                center,
                concentration,
                ..
            } => {
                if center.len() != dim {
                    return invalid("bump center length must equal dim");
                }
                check_unit(center, 1e-12)?;
                if !(*floor > 0.0 && *amplitude >= 0.0 && *concentration >= 0.0)
                    || !(floor.is_finite() && amplitude.is_finite() && concentration.is_finite())
                {
                    return invalid("bump needs floor > 0, amplitude >= 0, concentration >= 0");
                }
            }
            Theta::Tabulated {
                angles,
                polar,
                azimuth,
                values,
                rotation: rot,
            } => {
                if values.is_empty() {
                    return Err(Error::InvalidState("tabulated density has an empty table".into()));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return invalid("tabulated values must be finite and positive");
                }
                table_min = values.iter().copied().fold(f64::INFINITY, f64::min);
                match dim {
                    2 => {
                        let a = angles.as_ref().ok_or_else(|| {
                            Error::InvalidArgument("d=2 table needs `angles`".into())
                        })?;
                        if a.len() != values.len() {
                            return invalid("angles and values differ in length");
                        }
                        check_increasing(a, 2.0 * std::f64::consts::PI)?;
                    }
                    3 => {
                        let (p, z) = match (polar, azimuth) {
                            (Some(p), Some(z)) => (p, z),
                            _ => return invalid("d=3 table needs `polar` and `azimuth`"),
                        };
                        if p.len() * z.len() != values.len() || p.len() < 2 {
                            return invalid("values must have polar.len() * azimuth.len() entries");
                        }
                        check_increasing(p, f64::INFINITY)?;
                        check_increasing(z, 2.0 * std::f64::consts::PI)?;
                    }
                    _ => return invalid("tabulated densities support d = 2 or 3"),
                }
                if let Some(r) = rot {
                    let m = Matrix::from_rows(r)?;
                    if m.n != dim {
                        return invalid("rotation must be dim x dim");
                    }
                    rotation = Some(m);
                }
            }
        }
        Ok(Self {
            dim,
            theta,
            rotation,
            table_min,
        })
    }

    /// ϑ(w) for a unit vector `w`, without input checks.
    pub fn eval(&self, w: &[f64]) -> f64 {
        match &self.theta {
            Theta::Constant { c0 } => *c0,
            Theta::CosineTilt { c0, c1, v } => c0 + c1 * dot(w, v),
            Theta::BumpPlusFloor {
                floor,
                amplitude,
                center,
                concentration,
                antipodal,
            } => {
                let c = dot(w, center);
                let mut s = floor + amplitude * (concentration * (c - 1.0)).exp();
                if *antipodal {
                    s += amplitude * (concentration * (-c - 1.0)).exp();
                }
                s
            }
            Theta::Tabulated {
                angles,
                polar,
                azimuth,
                values,
                ..
            } => {
                let rotated;
                let w = match &self.rotation {
                    Some(r) => {
                        rotated = r.apply(w);
                        &rotated[..]
                    }
                    None => w,
                };
                let v = if self.dim == 2 {
                    interp_periodic(angles.as_deref().unwrap_or(&[]), values, angle2(w))
                } else {
                    let (th, ph) = polar_azimuth(w);
                    interp_triangulated(
                        polar.as_deref().unwrap_or(&[]),
                        azimuth.as_deref().unwrap_or(&[]),
                        values,
                        th,
                        ph,
                    )
                };
                v.max(self.table_min)
            }
        }
    }

    /// Checked evaluation: rejects non-unit input.
    pub fn evaluate(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.dim {
            return invalid("direction has wrong dimension");
        }
        check_unit(w, 1e-12)?;
        Ok(self.eval(w))
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.theta, Theta::Tabulated { .. })
    }

    /// Largest value of |ϑ(w) − ϑ(−w)| on the grid, with its direction.
    pub fn asymmetry(&self, grid: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let mut worst = (0.0, grid[0].clone());
        for w in grid {
            let m: Vec<f64> = w.iter().map(|x| -x).collect();
            let d = (self.eval(w) - self.eval(&m)).abs();
            if d > worst.0 {
                worst = (d, w.clone());
            }
        }
        worst
    }

    /// The density of the rotated process `Q X`: ϑ'(w) = ϑ(Qᵀw).
    pub fn rotated(&self, q: &Matrix) -> Result<Self> {
        let theta = match &self.theta {
            Theta::Constant { .. } => self.theta.clone(),
            Theta::CosineTilt { c0, c1, v } => Theta::CosineTilt {
                c0: *c0,
                c1: *c1,
                v: q.apply(v),
            },
            Theta::BumpPlusFloor {
                floor,
                amplitude,
                center,
                concentration,
                antipodal,
            } => Theta::BumpPlusFloor {
                floor: *floor,
                amplitude: *amplitude,
                center: q.apply(center),
                concentration: *concentration,
                antipodal: *antipodal,
            },
            Theta::Tabulated {
                angles,
                polar,
                azimuth,
                values,
                ..
            } => {
                let base = self.rotation.clone().unwrap_or_else(|| Matrix::identity(self.dim));
                Theta::Tabulated {
                    angles: angles.clone(),
                    polar: polar.clone(),
                    azimuth: azimuth.clone(),
                    values: values.clone(),
                    rotation: Some(base.mul(&q.transpose()).rows()),
                }
            }
        };
        Self::new(self.dim, theta)
    }
}

fn check_increasing(a: &[f64], span: f64) -> Result<()> {
    if a.is_empty() || a.iter().any(|x| !x.is_finite()) {
        return invalid("grid must be non-empty and finite");
    }
    if a.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("grid must be strictly increasing");
    }
    if a[a.len() - 1] - a[0] >= span {
        return invalid("grid spans more than one period");
    }
    Ok(())
}

/// Angle of a planar direction in [0, 2π).
pub fn angle2(w: &[f64]) -> f64 {
    let t = w[1].atan2(w[0]);
    if t < 0.0 {
        t + 2.0 * std::f64::consts::PI
    } else {
        t
    }
}

/// Polar angle in [0, π] and azimuth in [0, 2π) of a direction in R^3.
pub fn polar_azimuth(w: &[f64]) -> (f64, f64) {
    let th = w[2].clamp(-1.0, 1.0).acos();
    (th, angle2(w))
}

/// Linear interpolation on a periodic grid of period 2π.
fn interp_periodic(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len();
    if n == 1 {
        return y[0];
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    // Bring t into [x0, x0 + 2π).
    let t = x[0] + (t - x[0]).rem_euclid(two_pi);
    let i = x.partition_point(|&v| v <= t);
    let (xa, ya, xb, yb) = if i == n {
        (x[n - 1], y[n - 1], x[0] + two_pi, y[0])
    } else {
        (x[i - 1], y[i - 1], x[i], y[i])
    };
    let s = (t - xa) / (xb - xa);
    ya + s * (yb - ya)
}

fn interp_triangulated(polar: &[f64], az: &[f64], values: &[f64], th: f64, ph: f64) -> f64 {
    let np = polar.len();
    let na = az.len();
    let th = th.clamp(polar[0], polar[np - 1]);
    let i = (polar.partition_point(|&v| v <= th).max(1) - 1).min(np - 2);
    let s = (th - polar[i]) / (polar[i + 1] - polar[i]);
    let two_pi = 2.0 * std::f64::consts::PI;
    let (j0, j1, t) = if na == 1 {
        (0, 0, 0.0)
    } else {
        let p = az[0] + (ph - az[0]).rem_euclid(two_pi);
        let j = az.partition_point(|&v| v <= p);
        if j == na {
            (na - 1, 0, (p - az[na - 1]) / (az[0] + two_pi - az[na - 1]))
        } else {
            (j - 1, j, (p - az[j - 1]) / (az[j] - az[j - 1]))
        }
    };
    let v = |a: usize, b: usize| values[a * na + b];
    let (v00, v10, v01, v11) = (v(i, j0), v(i + 1, j0), v(i, j1), v(i + 1, j1));
    if s + t <= 1.0 {
        v00 + s * (v10 - v00) + t * (v01 - v00)
    } else {
        v11 + (1.0 - s) * (v01 - v11) + (1.0 - t) * (v10 - v11)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    alpha: f64,
    dim: usize,
    theta: Theta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<f64>>,
}

/// A strictly α-stable process: index α, spherical density ϑ, and a drift
/// γ that may only be present at α = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct StableSpec {
    pub alpha: f64,
    pub theta: SphericalDensity,
    pub gamma: Option<Vec<f64>>,
}

impl TryFrom<SpecJson> for StableSpec {
    type Error = Error;
    fn try_from(j: SpecJson) -> Result<Self> {
        let theta = SphericalDensity::new(j.dim, j.theta)?;
        if let Some(g) = &j.gamma {
            if g.len() != j.dim {
                return invalid("gamma length must equal dim");
            }
        }
        Ok(Self {
            alpha: j.alpha,
            theta,
            gamma: j.gamma,
        })
    }
}

impl From<StableSpec> for SpecJson {
    fn from(s: StableSpec) -> Self {
        SpecJson {
            alpha: s.alpha,
            dim: s.theta.dim,
            theta: s.theta.theta,
            gamma: s.gamma,
        }
    }
}

impl StableSpec {
    /// Builds a spec and checks it with [`StableSpec::validate`].
    pub fn new(alpha: f64, dim: usize, theta: Theta, gamma: Option<Vec<f64>>) -> Result<Self> {
        let spec = Self {
            alpha,
            theta: SphericalDensity::new(dim, theta)?,
            gamma,
        };
        spec.ensure_valid()?;
        Ok(spec)
    }

    /// Isotropic spec with ϑ ≡ 1.
    pub fn isotropic(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, dim, Theta::Constant { c0: 1.0 }, None)
    }

    /// Spec with ϑ(w) = c0 + c1⟨w, v⟩.
    pub fn cosine_tilt(alpha: f64, c0: f64, c1: f64, v: Vec<f64>) -> Result<Self> {
        let dim = v.len();
        Self::new(alpha, dim, Theta::CosineTilt { c0, c1, v }, None)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("spec JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn dim(&self) -> usize {
        self.theta.dim
    }

    pub fn is_alpha_one(&self) -> bool {
        self.alpha == 1.0
    }

    /// The drift vector, zero when absent.
    pub fn drift(&self) -> Vec<f64> {
        self.gamma.clone().unwrap_or_else(|| vec![0.0; self.dim()])
    }

    /// Lévy density |x|^{-d-α} ϑ(x/|x|).
    pub fn levy_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return invalid("point has wrong dimension");
        }
        let r = norm(x);
        if !(r > 0.0 && r.is_finite()) {
            return invalid("Levy density is singular at the origin");
        }
        let w: Vec<f64> = x.iter().map(|v| v / r).collect();
        Ok(r.powf(-(self.dim() as f64) - self.alpha) * self.theta.eval(&w))
    }

    /// Spec of the rotated process `Q X`.
    pub fn rotated(&self, q: &Matrix) -> Result<Self> {
        Ok(Self {
            alpha: self.alpha,
            theta: self.theta.rotated(q)?,
            gamma: self.gamma.as_ref().map(|g| q.apply(g)),
        })
    }

    /// Checks every standing assumption and reports each one.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let a = self.alpha;
        let d = self.dim();
        checks.push(Check::new(
            "alpha-range",
            a > 0.0 && a < 2.0,
            format!("alpha = {a}"),
        ));
        checks.push(Check::new(
            "alpha-not-near-one",
            a == 1.0 || (a - 1.0).abs() >= ALPHA_ONE_GAP,
            format!("|alpha - 1| = {:e}", (a - 1.0).abs()),
        ));
        let grid = direction_grid(d, VALIDATION_GRID);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut wlo, mut whi) = (grid[0].clone(), grid[0].clone());
        for w in &grid {
            let v = self.theta.eval(w);
            if !(v >= lo) {
                lo = v;
                wlo = w.clone();
            }
            if !(v <= hi) {
                hi = v;
                whi = w.clone();
            }
        }
        let mut c = Check::new("theta-positive", lo > 0.0, format!("min theta = {lo:e}"));
        if !c.passed {
            c.witness = Some(wlo);
        }
        checks.push(c);
        let mut c = Check::new("theta-finite", hi.is_finite(), format!("max theta = {hi:e}"));
        if !c.passed {
            c.witness = Some(whi);
        }
        checks.push(c);
        if a == 1.0 {
            let tol = if self.theta.is_tabulated() {
                TOL_SYM_TABULATED
            } else {
                TOL_SYM_CLOSED
            };
            let (asym, w) = self.theta.asymmetry(&grid);
            let mut c = Check::new(
                "theta-symmetric-at-alpha-one",
                asym <= tol,
                format!("max |theta(w) - theta(-w)| = {asym:e}, tolerance {tol:e}"),
            );
            if !c.passed {
                c.witness = Some(w);
            }
            checks.push(c);
        }
        match &self.gamma {
            Some(g) => {
                checks.push(Check::new(
                    "drift-only-at-alpha-one",
                    a == 1.0,
                    "drift gamma is present".to_string(),
                ));
                checks.push(Check::new(
                    "drift-finite",
                    g.len() == d && g.iter().all(|v| v.is_finite()),
                    format!("gamma = {g:?}"),
                ));
            }
            None => checks.push(Check::new(
                "drift-only-at-alpha-one",
                true,
                "no drift".to_string(),
            )),
        }
        let passed = checks.iter().all(|c| c.passed);
        ValidationReport { passed, checks }
    }

    /// Turns the first failed check into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let r = self.validate();
        match r.checks.iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => invalid(format!("spec fails {}: {}", c.name, c.detail)),
        }
    }
}

/// One validation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
            witness: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation_to_last_axis;

    fn tilt(alpha: f64) -> StableSpec {
        StableSpec::cosine_tilt(alpha, 1.0, 0.5, vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn theta_examples() {
        let s = tilt(1.5);
        assert_eq!(s.theta.evaluate(&[1.0, 0.0]).unwrap(), 1.5);
        assert_eq!(s.theta.evaluate(&[-1.0, 0.0]).unwrap(), 0.5);
        assert!(s.theta.evaluate(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn levy_density_examples() {
        let s = StableSpec::isotropic(1.5, 2).unwrap();
        assert!((s.levy_density(&[2.0, 0.0]).unwrap() - 2f64.powf(-3.5)).abs() < 1e-15);
        let t = tilt(0.5);
        assert!((t.levy_density(&[0.0, 3.0]).unwrap() - 3f64.powf(-2.5)).abs() < 1e-15);
        assert!(s.levy_density(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn validation_examples() {
        let bad = StableSpec {
            alpha: 1.0,
            theta: SphericalDensity::new(
                2,
                Theta::CosineTilt {
                    c0: 1.0,
                    c1: 0.5,
                    v: vec![1.0, 0.0],
                },
            )
            .unwrap(),
            gamma: None,
        };
        let r = bad.validate();
        assert!(!r.passed);
        let f: Vec<_> = r.failed().collect();
        assert_eq!(f[0].name, "theta-symmetric-at-alpha-one");
        assert!(f[0].witness.is_some());

        let mut drift = StableSpec::isotropic(1.5, 2).unwrap();
        drift.gamma = Some(vec![0.3, 0.0]);
        assert!(!drift.validate().passed);

        let ok = StableSpec::new(1.0, 2, Theta::Constant { c0: 1.0 }, Some(vec![0.3, 0.0]));
        assert!(ok.is_ok());
    }

    #[test]
    fn near_one_alpha_rejected() {
        assert!(StableSpec::isotropic(1.0 + 1e-9, 2).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let s = StableSpec::new(
            0.7318423987123,
            3,
            Theta::BumpPlusFloor {
                floor: 0.1 + 0.2,
                amplitude: 1.0 / 3.0,
                center: vec![0.0, 0.6, 0.8],
                concentration: 4.123456789012345,
                antipodal: false,
            },
            None,
        )
        .unwrap();
        let j = s.to_json();
        let back = StableSpec::from_json(&j).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), j);
    }

    #[test]
    fn json_field_names() {
        let j = r#"{"alpha":1.5,"dim":2,"theta":{"kind":"cosine-tilt","c0":1.0,"c1":0.5,"v":[1.0,0.0]}}"#;
        let s = StableSpec::from_json(j).unwrap();
        assert_eq!(s.to_json(), j);
    }

    #[test]
    fn tabulated_interpolation_2d() {
        let n = 64;
        let angles: Vec<f64> = (0..n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect();
        let values: Vec<f64> = angles.iter().map(|t| 1.0 + 0.5 * t.cos()).collect();
        let d = SphericalDensity::new(
            2,
            Theta::Tabulated {
                angles: Some(angles.clone()),
                polar: None,
                azimuth: None,
                values: values.clone(),
                rotation: None,
            },
        )
        .unwrap();
        assert!((d.eval(&[angles[5].cos(), angles[5].sin()]) - values[5]).abs() < 1e-14);
        let t: f64 = 6.25;
        assert!((d.eval(&[t.cos(), t.sin()]) - (1.0 + 0.5 * t.cos())).abs() < 2e-3);
    }

    #[test]
    fn tabulated_interpolation_3d_reproduces_nodes() {
        let polar: Vec<f64> = (0..17).map(|i| std::f64::consts::PI * i as f64 / 16.0).collect();
        let az: Vec<f64> = (0..32).map(|j| 2.0 * std::f64::consts::PI * j as f64 / 32.0).collect();
        let f = |th: f64, ph: f64| 1.0 + 0.5 * th.sin() * ph.cos();
        let mut values = Vec::new();
        for &th in &polar {
            for &ph in &az {
                values.push(f(th, ph));
            }
        }
        let d = SphericalDensity::new(
            3,
            Theta::Tabulated {
                angles: None,
                polar: Some(polar.clone()),
                azimuth: Some(az.clone()),
                values,
                rotation: None,
            },
        )
        .unwrap();
        let (th, ph) = (polar[5], az[7]);
        let w = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
        assert!((d.eval(&w) - f(th, ph)).abs() < 1e-12);
        let (th, ph) = (1.0f64, 2.0f64);
        let w = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
        assert!((d.eval(&w) - f(th, ph)).abs() < 1e-2);
    }

    #[test]
    fn rotation_of_theta() {
        let s = StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![0.6, 0.8]).unwrap();
        let q = rotation_to_last_axis(&[0.6, 0.8]);
        let r = s.rotated(&q).unwrap();
        let w = [0.0, 1.0];
        let qtw = q.apply_t(&w);
        assert!((r.theta.eval(&w) - s.theta.eval(&qtw)).abs() < 1e-15);
        assert!((r.theta.eval(&w) - 1.5).abs() < 1e-14);
    }
}
