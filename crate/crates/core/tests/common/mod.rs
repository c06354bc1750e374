//! Shared oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use alphadecay::generator::{CustomFn, GaussianBump, TestFunction};
use alphadecay::StableSpec;
use rayon::prelude::*;

/// Brute-force generator on a fixed polar grid (d = 2): `n_ang` midpoint
/// angles times `n_rad` midpoints in v = ln r on [ln r0, ln r_max], split at
/// r = 1. Second-order Taylor tails below r0 from finite-difference derivatives; f is
/// taken as 0 beyond r_max. Uses only f's values.
pub fn dense_generator(spec: &StableSpec, f: &dyn TestFunction, x: &[f64], n_ang: usize, n_rad: usize, r0: f64) -> f64 {
    assert_eq!(x.len(), 2);
    let a = spec.alpha;
    let r_max: f64 = 1e5;
    let val = |y0: f64, y1: f64| f.value(&[y0, y1]);
    let f0 = val(x[0], x[1]);
    let h = 1e-3;
    let g = [
        (8.0 * (val(x[0] + h, x[1]) - val(x[0] - h, x[1])) - (val(x[0] + 2.0 * h, x[1]) - val(x[0] - 2.0 * h, x[1])))
            / (12.0 * h),
        (8.0 * (val(x[0], x[1] + h) - val(x[0], x[1] - h)) - (val(x[0], x[1] + 2.0 * h) - val(x[0], x[1] - 2.0 * h)))
            / (12.0 * h),
    ];
    let (lo, hi) = (r0.ln(), r_max.ln());
    let n_lo = ((n_rad as f64) * (-lo) / (hi - lo)).round() as usize;
    let n_hi = n_rad - n_lo;
    let segments = [(lo, 0.0, n_lo), (0.0, hi, n_hi)];
    let sum: f64 = (0..n_ang)
        .into_par_iter()
        .map(|j| {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n_ang as f64;
            let w = [phi.cos(), phi.sin()];
            let gw = g[0] * w[0] + g[1] * w[1];
            let along = |r: f64| val(x[0] + r * w[0], x[1] + r * w[1]);
            let hw = (-along(2.0 * h) + 16.0 * along(h) - 30.0 * f0 + 16.0 * along(-h) - along(-2.0 * h)) / (12.0 * h * h);
            let mut radial = 0.0;
            for &(v0, v1, n) in &segments {
                let dv = (v1 - v0) / n as f64;
                for k in 0..n {
                    let v = v0 + (k as f64 + 0.5) * dv;
                    let r = v.exp();
                    let comp = if a > 1.0 || (a == 1.0 && r < 1.0) { r * gw } else { 0.0 };
                    radial += (val(x[0] + r * w[0], x[1] + r * w[1]) - f0 - comp) * r.powf(-a) * dv;
                }
            }
            radial += 0.5 * hw * r0.powf(2.0 - a) / (2.0 - a);
            if a < 1.0 {
                radial += gw * r0.powf(1.0 - a) / (1.0 - a);
            }
            radial -= f0 * r_max.powf(-a) / a;
            if a > 1.0 {
                radial -= gw * r_max.powf(1.0 - a) / (a - 1.0);
            }
            spec.theta.eval(&w) * radial
        })
        .sum();
    let mut out = sum * 2.0 * PI / n_ang as f64;
    if a == 1.0 {
        let gamma = spec.drift();
        out += gamma[0] * g[0] + gamma[1] * g[1];
    }
    out
}

/// Oracle value on the 10³ × 10⁴ grid with an error estimate from halving
/// both resolutions and from doubling the Taylor radius.
pub fn dense_generator_with_error(spec: &StableSpec, f: &dyn TestFunction, x: &[f64]) -> (f64, f64) {
    let fine = dense_generator(spec, f, x, 1000, 10_000, 1e-4);
    let coarse = dense_generator(spec, f, x, 500, 5_000, 1e-4);
    let shifted = dense_generator(spec, f, x, 1000, 10_000, 2e-4);
    (fine, (fine - coarse).abs().max((fine - shifted).abs()).max(1e-12))
}

/// A smooth test function with its evaluation point.
pub struct SmoothCase {
    pub name: &'static str,
    pub f: Box<dyn TestFunction>,
    pub x: Vec<f64>,
}

fn custom(
    value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    sup: f64,
) -> Box<dyn TestFunction> {
    Box::new(CustomFn {
        dim: 2,
        value: Box::new(value),
        gradient: Box::new(gradient),
        sup,
    })
}

/// Ten smooth bounded functions on the plane.
pub fn smooth_suite() -> Vec<SmoothCase> {
    let bump = |c: [f64; 2], w: f64, h: f64| -> Box<dyn TestFunction> { Box::new(GaussianBump::new(c.to_vec(), w, h)) };
    vec![
        SmoothCase { name: "unit bump at its center", f: bump([0.0, 0.0], 1.0, 1.0), x: vec![0.0, 0.0] },
        SmoothCase { name: "narrow offset bump", f: bump([0.5, -0.3], 0.7, 1.0), x: vec![0.1, 0.2] },
        SmoothCase { name: "wide tall bump", f: bump([1.0, 1.0], 1.5, 2.0), x: vec![0.0, 0.0] },
        SmoothCase { name: "sharp bump on its flank", f: bump([-0.4, 0.8], 0.4, 1.0), x: vec![0.0, 0.5] },
        SmoothCase {
            name: "difference of two bumps",
            f: custom(
                |y| (-((y[0] - 0.3).powi(2) + y[1] * y[1])).exp() - 0.5 * (-((y[0] + 0.2).powi(2) + (y[1] - 0.4).powi(2)) / 0.25).exp(),
                |y| {
                    let e1 = (-((y[0] - 0.3).powi(2) + y[1] * y[1])).exp();
                    let e2 = (-((y[0] + 0.2).powi(2) + (y[1] - 0.4).powi(2)) / 0.25).exp();
                    vec![
                        -2.0 * (y[0] - 0.3) * e1 + 0.5 * 8.0 * (y[0] + 0.2) * e2,
                        -2.0 * y[1] * e1 + 0.5 * 8.0 * (y[1] - 0.4) * e2,
                    ]
                },
                1.0,
            ),
            x: vec![0.0, 0.0],
        },
        SmoothCase {
            name: "rational decay",
            f: custom(
                |y| 1.0 / (1.0 + y[0] * y[0] + y[1] * y[1]),
                |y| {
                    let q = 1.0 + y[0] * y[0] + y[1] * y[1];
                    vec![-2.0 * y[0] / (q * q), -2.0 * y[1] / (q * q)]
                },
                1.0,
            ),
            x: vec![0.3, -0.2],
        },
        SmoothCase {
            name: "modulated bump",
            f: custom(
                |y| (-(y[0] * y[0] + y[1] * y[1])).exp() * (2.0 * y[0] + y[1]).cos(),
                |y| {
                    let e = (-(y[0] * y[0] + y[1] * y[1])).exp();
                    let (c, s) = ((2.0 * y[0] + y[1]).cos(), (2.0 * y[0] + y[1]).sin());
                    vec![e * (-2.0 * y[0] * c - 2.0 * s), e * (-2.0 * y[1] * c - s)]
                },
                1.0,
            ),
            x: vec![0.2, 0.1],
        },
        SmoothCase {
            name: "anisotropic bump",
            f: custom(
                |y| (-(y[0] * y[0] / 0.5 + 2.0 * y[1] * y[1])).exp(),
                |y| {
                    let e = (-(y[0] * y[0] / 0.5 + 2.0 * y[1] * y[1])).exp();
                    vec![-4.0 * y[0] * e, -4.0 * y[1] * e]
                },
                1.0,
            ),
            x: vec![0.1, -0.1],
        },
        SmoothCase {
            name: "squared rational",
            f: custom(
                |y| (1.0 + (y[0] - 0.5).powi(2) + (y[1] - 0.5).powi(2)).powi(-2),
                |y| {
                    let q = 1.0 + (y[0] - 0.5).powi(2) + (y[1] - 0.5).powi(2);
                    vec![-4.0 * (y[0] - 0.5) / q.powi(3), -4.0 * (y[1] - 0.5) / q.powi(3)]
                },
                1.0,
            ),
            x: vec![0.0, 0.0],
        },
        SmoothCase {
            name: "odd bump",
            f: custom(
                |y| y[0] * (-(y[0] * y[0] + y[1] * y[1])).exp(),
                |y| {
                    let e = (-(y[0] * y[0] + y[1] * y[1])).exp();
                    vec![e * (1.0 - 2.0 * y[0] * y[0]), -2.0 * y[0] * y[1] * e]
                },
                0.5,
            ),
            x: vec![0.4, 0.3],
        },
    ]
}

/// The three specs of the oracle suite: one per α regime.
pub fn oracle_specs() -> Vec<(&'static str, StableSpec)> {
    use alphadecay::Theta;
    vec![
        ("isotropic alpha=1.5", StableSpec::isotropic(1.5, 2).unwrap()),
        ("tilted alpha=0.6", StableSpec::cosine_tilt(0.6, 1.0, 0.5, vec![0.6, 0.8]).unwrap()),
        (
            "antipodal bump alpha=1 with drift",
            StableSpec::new(
                1.0,
                2,
                Theta::BumpPlusFloor {
                    floor: 0.5,
                    amplitude: 1.0,
                    center: vec![1.0, 0.0],
                    concentration: 4.0,
                    antipodal: true,
                },
                Some(vec![0.3, -0.2]),
            )
            .unwrap(),
        ),
    ]
}
