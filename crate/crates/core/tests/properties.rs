use alphadecay::experiments::relative_oscillation;
use alphadecay::geometry::{DomainGeometry, Shape};
use alphadecay::linalg::norm;
use alphadecay::montecarlo::rng;
use alphadecay::projection::{beta, beta_range, HemisphereQuad};
use alphadecay::stats::{fit_power_law, RayPoint};
use alphadecay::StableSpec;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn alpha_not_one() -> impl Strategy<Value = f64> {
    prop_oneof![0.2f64..0.95, 1.05f64..1.9]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn antipodal_betas_sum_to_alpha(a in alpha_not_one(), c1 in -0.9f64..0.9, v in 0.0f64..6.28, phi in 0.0f64..6.28) {
        let spec = StableSpec::cosine_tilt(a, 1.0, c1, vec![v.cos(), v.sin()]).unwrap();
        let q = HemisphereQuad::default();
        let u = [phi.cos(), phi.sin()];
        let b1 = beta(&spec, &u, &q).unwrap();
        let b2 = beta(&spec, &[-u[0], -u[1]], &q).unwrap();
        prop_assert!((b1 + b2 - a).abs() < 1e-8);
        let (lo, hi) = beta_range(a);
        prop_assert!(b1 > lo && b1 < hi);
    }

    #[test]
    fn beta_is_rotation_covariant(a in alpha_not_one(), c1 in -0.9f64..0.9, rot in 0.0f64..6.28, phi in 0.0f64..6.28) {
        let q = HemisphereQuad::default();
        let spec = StableSpec::cosine_tilt(a, 1.0, c1, vec![1.0, 0.0]).unwrap();
        let turned = StableSpec::cosine_tilt(a, 1.0, c1, vec![rot.cos(), rot.sin()]).unwrap();
        let b1 = beta(&spec, &[phi.cos(), phi.sin()], &q).unwrap();
        let b2 = beta(&turned, &[(phi + rot).cos(), (phi + rot).sin()], &q).unwrap();
        prop_assert!((b1 - b2).abs() < 1e-8);
    }

    #[test]
    fn ball_nearest_point_is_at_distance_delta(r in 0.5f64..3.0, px in -0.9f64..0.9, py in -0.9f64..0.9) {
        prop_assume!(px.hypot(py) < 0.95 && px.hypot(py) > 0.05);
        let b = DomainGeometry::ball(vec![0.3, -0.2], r).unwrap();
        let x = [0.3 + r * px, -0.2 + r * py];
        let (z, n) = b.nearest_boundary(&x).unwrap();
        let d = b.delta(&x).unwrap();
        prop_assert!((norm(&[x[0] - z[0], x[1] - z[1]]) - d).abs() < 1e-12);
        prop_assert!((x[0] - z[0] - d * n[0]).abs() < 1e-12 && (x[1] - z[1] - d * n[1]).abs() < 1e-12);
    }

    #[test]
    fn ellipse_projection_has_small_residual(a in 1.0f64..3.0, b in 0.5f64..1.0, t in 0.0f64..6.28, s in 0.7f64..0.99) {
        let e = DomainGeometry::new(Shape::Ellipsoid { center: vec![0.0, 0.0], semi_axes: vec![a, b], axes: None }).unwrap();
        let x = [s * a * t.cos(), s * b * t.sin()];
        prop_assume!(e.depth(&x) < 0.99 * e.collar());
        let (z, _) = e.nearest_boundary(&x).unwrap();
        prop_assert!(e.boundary_residual(&z) < 1e-10);
    }

    #[test]
    fn fitted_slope_ignores_scaling(p in 0.1f64..1.9, c in 0.01f64..100.0) {
        let pts: Vec<RayPoint> = [0.3, 0.2, 0.1, 0.05, 0.02].iter().map(|&t: &f64| RayPoint { t, value: c * t.powf(p), se: 0.0 }).collect();
        let f = fit_power_law(&pts).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn relative_oscillation_is_scale_free(v in prop::collection::vec(0.1f64..10.0, 1..20), k in 0.01f64..100.0) {
        let a = relative_oscillation(&v).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| k * x).collect();
        prop_assert!((relative_oscillation(&scaled).unwrap() - a).abs() < 1e-12 * a);
        prop_assert!(a >= 1.0);
    }

    #[test]
    fn spec_json_round_trips(a in 0.1f64..1.99, c1 in -0.99f64..0.99, v in 0.0f64..6.28) {
        prop_assume!((a - 1.0).abs() > 1e-6);
        let spec = StableSpec::cosine_tilt(a, 1.0, c1, vec![v.cos(), v.sin()]).unwrap();
        let back = StableSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), spec.to_json());
        prop_assert_eq!(back.alpha.to_bits(), a.to_bits());
    }
}

#[test]
fn power_fit_interval_covers_under_relative_noise() {
    let ts = [0.3, 0.21, 0.15, 0.106, 0.075, 0.053];
    let mut covered = 0;
    for rep in 0..100 {
        let mut r = rng(500, rep);
        let pts: Vec<RayPoint> = ts
            .iter()
            .map(|&t: &f64| {
                let z: f64 = StandardNormal.sample(&mut r);
                let v = t.powf(0.75) * (1.0 + 0.01 * z);
                RayPoint { t, value: v, se: 0.01 * v }
            })
            .collect();
        let f = fit_power_law(&pts).unwrap();
        covered += (f.ci[0] <= 0.75 && 0.75 <= f.ci[1]) as usize;
    }
    assert!(covered >= 93, "{covered}/100");
}
