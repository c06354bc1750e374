//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Arguments select criteria by number (`cargo test --test acceptance -- 5 9`).
//! The process exits 0 unless ALPHADECAY_STRICT=1 is set and a criterion fails,
//! so that known failures are reported without breaking the test suite.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use alphadecay::experiments::{default_reduction_points, run_decay_experiment, run_reduction_check};
use alphadecay::generator::{apply_generator, g_boundedness_scan, halfspace_scan_with_exponent, ExponentField};
use alphadecay::linalg::dot;
use alphadecay::montecarlo::{rng, Stable1d};
use alphadecay::projection::{beta, beta_map, beta_range, c_plus, directional_law};
use alphadecay::sphere::circle_directions;
use alphadecay::stats::{fit_power_law, ks_two_sample, RayPoint};
use alphadecay::{
    DecayConfig, DomainGeometry, GeneratorQuad, HemisphereQuad, PathConfig, PathSampler, ReductionConfig,
    StableSpec, Theta,
};
use rayon::prelude::*;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: usize,
    name: &'static str,
    run: fn(&mut Vec<String>) -> Outcome,
}

fn hq() -> HemisphereQuad {
    HemisphereQuad::default()
}

fn e(msg: impl std::fmt::Display) -> String {
    msg.to_string()
}

/// α=1 spec with a symmetric, non-uniform density and a drift.
fn alpha_one_with_drift() -> StableSpec {
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
    .unwrap()
}

/// α ∈ {0.6, 1, 1.5} × {isotropic, non-symmetric}. At α = 1 a cosine tilt
/// is not admissible, so the drift carries the asymmetry.
fn six_specs() -> Vec<(&'static str, StableSpec)> {
    vec![
        ("iso a=0.6", StableSpec::isotropic(0.6, 2).unwrap()),
        ("tilt a=0.6", StableSpec::cosine_tilt(0.6, 1.0, 0.5, vec![1.0, 0.0]).unwrap()),
        ("iso a=1", StableSpec::isotropic(1.0, 2).unwrap()),
        ("bump+drift a=1", alpha_one_with_drift()),
        ("iso a=1.5", StableSpec::isotropic(1.5, 2).unwrap()),
        ("tilt a=1.5", StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![1.0, 0.0]).unwrap()),
    ]
}

fn positivity_oracle(_: &mut Vec<String>) -> Outcome {
    const N: usize = 1_000_000;
    let specs = six_specs();
    let dirs = circle_directions(8);
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|s| (0..dirs.len()).map(move |k| (s, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, k)| {
            let spec = &specs[s].1;
            let law = directional_law(spec, &dirs[k], &hq()).map_err(e)?;
            let y = Stable1d::new(spec.alpha, law.c_plus, law.c_minus, law.drift_b.unwrap_or(0.0)).map_err(e)?;
            let mut r = rng(101, (s * 8 + k) as u64);
            let p = (0..N).filter(|_| y.sample(1.0, &mut r) > 0.0).count() as f64 / N as f64;
            let se = spec.alpha * (p * (1.0 - p) / N as f64).sqrt();
            Ok(((spec.alpha * p - law.beta).abs() / se, se))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_se = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok((
        worst <= 4.0,
        format!("48 cases, worst |a*p - beta| = {worst:.2} se (se <= {max_se:.1e}), bound 4 se"),
    ))
}

fn betas(spec: &StableSpec, dirs: &[Vec<f64>]) -> Result<Vec<f64>, String> {
    Ok(beta_map(spec, dirs, &hq()).map_err(e)?.into_iter().map(|l| l.beta).collect())
}

fn antipodal_identity(_: &mut Vec<String>) -> Outcome {
    let dirs = circle_directions(256);
    let neg: Vec<Vec<f64>> = dirs.iter().map(|u| u.iter().map(|v| -v).collect()).collect();
    let mut worst: f64 = 0.0;
    for (_, spec) in six_specs() {
        let (a, b) = (betas(&spec, &dirs)?, betas(&spec, &neg)?);
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x + y - spec.alpha).abs());
        }
    }
    Ok((worst <= 1e-8, format!("6 specs x 256 directions, max |b(u)+b(-u)-a| = {worst:.1e}")))
}

fn beta_bounds(_: &mut Vec<String>) -> Outcome {
    let dirs = circle_directions(256);
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for (_, spec) in six_specs() {
        let (lo, hi) = beta_range(spec.alpha);
        for b in betas(&spec, &dirs)? {
            violations += !(b > lo && b < hi) as usize;
            margin = margin.min(b - lo).min(hi - b);
        }
    }
    Ok((
        violations == 0,
        format!("1536 values, {violations} outside (max(0,a-1), min(a,1)), smallest margin {margin:.3e}"),
    ))
}

fn wallis(_: &mut Vec<String>) -> Outcome {
    use statrs::function::gamma::gamma;
    let mut worst: f64 = 0.0;
    for a in [0.5, 1.0, 1.5] {
        let spec = StableSpec::isotropic(a, 2).unwrap();
        let want = PI.sqrt() * gamma((a + 1.0) / 2.0) / gamma(a / 2.0 + 1.0);
        for u in [vec![1.0, 0.0], vec![0.6, -0.8], vec![-FRAC_1_SQRT_2, FRAC_1_SQRT_2]] {
            let got = c_plus(&spec, &u, &hq()).map_err(e)?.value;
            worst = worst.max((got - want).abs());
        }
    }
    Ok((worst <= 1e-8, format!("alpha in {{0.5, 1, 1.5}}, max |C+ - Wallis| = {worst:.1e}")))
}

fn halfspace_specs() -> Vec<(&'static str, StableSpec)> {
    vec![
        ("iso a=1.5", StableSpec::isotropic(1.5, 2).unwrap()),
        ("tilt a=1.5", StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![0.6, 0.8]).unwrap()),
        ("tilt a=0.6", StableSpec::cosine_tilt(0.6, 1.0, 0.5, vec![0.6, 0.8]).unwrap()),
        ("bump+drift a=1", alpha_one_with_drift()),
    ]
}

fn halfspace_harmonicity(notes: &mut Vec<String>) -> Outcome {
    let u = [0.0, 1.0];
    let pts: Vec<Vec<f64>> = [0.0, 0.7]
        .iter()
        .flat_map(|&s| [0.25, 0.5, 1.0, 2.0].map(|t| vec![s, t]))
        .collect();
    let quad = GeneratorQuad {
        tol: 1e-7,
        ..GeneratorQuad::default()
    };
    let mut all = true;
    let mut parts = Vec::new();
    for (name, spec) in halfspace_specs() {
        let a = spec.alpha;
        let b = beta(&spec, &u, &hq()).map_err(e)?;
        let bound = |p: &Vec<f64>, b: f64| 1e-5 * (1.0 + p[1].powf(b - a));
        // Worst |𝒜h| relative to the bound.
        let ratio = |b: f64| -> Result<f64, String> {
            let s = halfspace_scan_with_exponent(&spec, &u, &pts, &quad, b).map_err(e)?;
            Ok(pts.iter().zip(&s.values).map(|(p, v)| v.value.abs() / bound(p, b)).fold(0.0, f64::max))
        };
        let control = |b: f64| -> Result<f64, String> {
            let s = halfspace_scan_with_exponent(&spec, &u, &pts, &quad, b + 0.1).map_err(e)?;
            Ok(pts.iter().zip(&s.values).map(|(p, v)| v.value.abs() / bound(p, b)).fold(f64::INFINITY, f64::min))
        };
        let (r, c) = (ratio(b)?, control(b)?);
        let ok = r <= 1.0 && c >= 100.0;
        all &= ok;
        parts.push(format!("{name}: max|Ah|/bound {r:.2e}, control min {c:.1e}"));
        let bd = beta(&spec, &[0.0, -1.0], &hq()).map_err(e)?;
        if (bd - b).abs() > 1e-12 {
            let (rd, cd) = (ratio(bd)?, control(bd)?);
            notes.push(format!(
                "{name}: with b(-u) = {bd:.6} instead of b(u) = {b:.6}, max|Ah|/bound {rd:.2e}, control min {cd:.1e}"
            ));
        }
    }
    Ok((all, parts.join("; ")))
}

fn generator_boundedness(notes: &mut Vec<String>) -> Outcome {
    let spec = StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![1.0, 0.0]).unwrap();
    let ball = DomainGeometry::ball(vec![0.0, 0.0], 1.0).unwrap();
    let z = [1.0, 0.0];
    let deltas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    // Values reach O(1) near the boundary, where the β field limits accuracy to about 1e-5.
    let quad = GeneratorQuad {
        tol: 1e-4,
        ..GeneratorQuad::default()
    };
    let scan = |f| g_boundedness_scan(&spec, &ball, &z, &deltas, &quad, f).map_err(e);
    let g = scan(ExponentField::Directional)?;
    let bz = beta(&spec, &[-1.0, 0.0], &hq()).map_err(e)?;
    let c = scan(ExponentField::Constant(bz))?;
    let dual = scan(ExponentField::Reflected)?;
    let vals: Vec<String> = g.values.iter().map(|v| format!("{:.3e}", v.value)).collect();
    notes.push(format!(
        "with b(-n(y)) the slope is {:.3}, values {:?}",
        dual.slope,
        dual.values.iter().map(|v| format!("{:.3e}", v.value)).collect::<Vec<_>>()
    ));
    Ok((
        g.slope >= -0.1 && c.slope <= -0.3,
        format!(
            "slope {:.3} (need >= -0.1), values [{}]; constant-exponent control slope {:.3} (need <= -0.3)",
            g.slope,
            vals.join(", "),
            c.slope
        ),
    ))
}

fn generator_oracle(_: &mut Vec<String>) -> Outcome {
    let quad = GeneratorQuad {
        outer_cutoff: 1e15,
        ..GeneratorQuad::default()
    };
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (sname, spec) in common::oracle_specs() {
        for case in common::smooth_suite() {
            let got = apply_generator(&spec, case.f.as_ref(), &case.x, &quad).map_err(e)?;
            let (want, oerr) = common::dense_generator_with_error(&spec, case.f.as_ref(), &case.x);
            let bound = got.err_estimate + oerr + 1e-9;
            let diff = (got.value - want).abs();
            worst = worst.max(diff / bound);
            count += 1;
            if diff > bound {
                fails.push(format!("{sname} / {}", case.name));
            }
        }
    }
    Ok((
        fails.is_empty(),
        format!(
            "{count} cases, worst |adaptive - oracle| / combined bound = {worst:.2}{}",
            if fails.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", fails.join(", "))
            }
        ),
    ))
}

fn sampler_consistency(_: &mut Vec<String>) -> Outcome {
    const N: usize = 100_000;
    let specs = vec![
        ("iso a=1.5", StableSpec::isotropic(1.5, 2).unwrap()),
        ("tilt a=0.8", StableSpec::cosine_tilt(0.8, 1.0, 0.6, vec![0.6, 0.8]).unwrap()),
        ("bump+drift a=1", alpha_one_with_drift()),
    ];
    let dirs: Vec<Vec<f64>> = [0.0, PI / 2.0, PI / 4.0, 2.0 * PI / 3.0]
        .iter()
        .map(|t: &f64| vec![t.cos(), t.sin()])
        .collect();
    let mut min_p = f64::INFINITY;
    let mut min_scaling_p = f64::INFINITY;
    let mut parts = Vec::new();
    for (s, (name, spec)) in specs.iter().enumerate() {
        let sampler = PathSampler::new(spec, &PathConfig::default()).map_err(e)?;
        let mut r = rng(800, s as u64);
        let incs: Vec<Vec<f64>> = (0..N).map(|_| sampler.increment(1.0, &mut r)).collect::<Result<_, _>>().map_err(e)?;
        let mut spec_min = f64::INFINITY;
        for (k, u) in dirs.iter().enumerate() {
            let law = directional_law(spec, u, &hq()).map_err(e)?;
            let y = Stable1d::new(spec.alpha, law.c_plus, law.c_minus, law.drift_b.unwrap_or(0.0)).map_err(e)?;
            let mut a: Vec<f64> = incs.iter().map(|x| dot(x, u)).collect();
            let mut r1 = rng(810 + s as u64, k as u64);
            let mut b: Vec<f64> = (0..N).map(|_| y.sample(1.0, &mut r1)).collect();
            spec_min = spec_min.min(ks_two_sample(&mut a, &mut b).map_err(e)?.p_value);
        }
        // Strict stability: X at time λ^α·t equals λ·X_t in law.
        let (lam, t) = (2.0f64, 0.5);
        let u = &dirs[0];
        let mut r2 = rng(820, s as u64);
        let mut big: Vec<f64> = (0..N)
            .map(|_| sampler.increment(lam.powf(spec.alpha) * t, &mut r2).map(|x| dot(&x, u)))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let mut small: Vec<f64> = (0..N)
            .map(|_| sampler.increment(t, &mut r2).map(|x| lam * dot(&x, u)))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let ps = ks_two_sample(&mut big, &mut small).map_err(e)?.p_value;
        min_p = min_p.min(spec_min);
        min_scaling_p = min_scaling_p.min(ps);
        parts.push(format!("{name}: min p {spec_min:.3}, scaling p {ps:.3}"));
    }
    Ok((
        min_p > 0.01 && min_scaling_p > 0.01,
        format!("N = 1e5, 4 directions each; {}", parts.join("; ")),
    ))
}

fn exact_decay_fit(_: &mut Vec<String>) -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, spec) in halfspace_specs() {
        let b = beta(&spec, &[0.0, 1.0], &hq()).map_err(e)?;
        let pts: Vec<RayPoint> = (0..6)
            .map(|k| {
                let t = 0.3 * FRAC_1_SQRT_2.powi(k);
                RayPoint {
                    t,
                    value: t.powf(b),
                    se: 0.0,
                }
            })
            .collect();
        let fit = fit_power_law(&pts).map_err(e)?;
        worst = worst.max((fit.slope - b).abs());
    }
    Ok((worst <= 1e-10, format!("4 specs, max |slope - b(e_d)| = {worst:.1e}")))
}

fn mc_decay_config(seed: u64) -> DecayConfig {
    DecayConfig {
        n_samples: 100_000,
        seed,
        ..DecayConfig::default()
    }
}

fn halfspace_decay(notes: &mut Vec<String>) -> Outcome {
    let cases = vec![
        (
            "isotropic, upper half-space",
            StableSpec::isotropic(1.5, 2).unwrap(),
            DomainGeometry::upper_half_space(2),
        ),
        (
            "tilt v=(1,0), half-space x1>0",
            StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![1.0, 0.0]).unwrap(),
            DomainGeometry::half_space(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap(),
        ),
    ];
    let mut all = true;
    let mut parts = Vec::new();
    for (k, (name, spec, dom)) in cases.into_iter().enumerate() {
        let rep = run_decay_experiment(&spec, &dom, &[0.0, 0.0], &mc_decay_config(1000 + k as u64)).map_err(e)?;
        let (b, f) = (rep.beta_predicted, rep.beta_fitted);
        let used = rep.rays.iter().filter(|r| r.t >= rep.fit_window.0 && r.t <= rep.fit_window.1).count();
        let ok = (f - b).abs() <= 0.02 && rep.ci[0] <= b && b <= rep.ci[1] && used >= 6;
        all &= ok;
        parts.push(format!(
            "{name}: predicted {b:.4}, fitted {f:.4}, ci [{:.4}, {:.4}], {used} ray points",
            rep.ci[0], rep.ci[1]
        ));
        let bd = rep.diagnostics.beta_reflected;
        if (bd - b).abs() > 1e-12 {
            notes.push(format!(
                "{name}: fitted {f:.4} against b(-n) = {bd:.4}: |diff| {:.4}, covered {}",
                (f - bd).abs(),
                rep.ci[0] <= bd && bd <= rep.ci[1]
            ));
        }
    }
    Ok((all, parts.join("; ")))
}

fn ball_decay(notes: &mut Vec<String>) -> Outcome {
    let spec = StableSpec::cosine_tilt(1.5, 1.0, 0.5, vec![1.0, 0.0]).unwrap();
    let ball = DomainGeometry::ball(vec![0.0, 0.0], 1.0).unwrap();
    let mut reps = Vec::new();
    for (k, z) in [[1.0, 0.0], [-1.0, 0.0]].iter().enumerate() {
        reps.push(run_decay_experiment(&spec, &ball, z, &mc_decay_config(1100 + k as u64)).map_err(e)?);
    }
    let within = reps.iter().all(|r| (r.beta_fitted - r.beta_predicted).abs() <= 0.05);
    let ordered = (reps[0].beta_fitted - reps[1].beta_fitted).signum()
        == (reps[0].beta_predicted - reps[1].beta_predicted).signum();
    let parts: Vec<String> = reps
        .iter()
        .map(|r| {
            format!(
                "z=({:.0},{:.0}): predicted {:.4}, fitted {:.4} ci [{:.4}, {:.4}]",
                r.z[0], r.z[1], r.beta_predicted, r.beta_fitted, r.ci[0], r.ci[1]
            )
        })
        .collect();
    let dual_within = reps
        .iter()
        .all(|r| (r.beta_fitted - r.diagnostics.beta_reflected).abs() <= 0.05);
    let dual_ordered = (reps[0].beta_fitted - reps[1].beta_fitted).signum()
        == (reps[0].diagnostics.beta_reflected - reps[1].diagnostics.beta_reflected).signum();
    notes.push(format!(
        "against b(-n(z)) = {:.4}, {:.4}: within 0.05 {dual_within}, ordered {dual_ordered}",
        reps[0].diagnostics.beta_reflected, reps[1].diagnostics.beta_reflected
    ));
    Ok((within && ordered, format!("{}; ordered {ordered}", parts.join("; "))))
}

fn harmonic_reduction(_: &mut Vec<String>) -> Outcome {
    let spec = StableSpec::isotropic(1.5, 2).unwrap();
    let ball = DomainGeometry::ball(vec![0.0, 0.0], 1.0).unwrap();
    let z = [0.0, 1.0];
    let cfg = ReductionConfig {
        n_samples: 50_000,
        seed: 1200,
        ..ReductionConfig::default()
    };
    let mut reps = Vec::new();
    for r in [0.25, 0.125, 0.0625] {
        reps.push(run_reduction_check(&spec, &ball, &z, r, &default_reduction_points(2, r), &cfg).map_err(e)?);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for w in reps.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let factor = b.max_deviation / a.max_deviation;
        let gap = a.max_deviation - b.max_deviation;
        let se = a.max_ratio_se.hypot(b.max_ratio_se);
        ok &= factor <= 0.8 && se < gap;
        parts.push(format!("r {} -> {}: factor {factor:.3}, gap {gap:.4}, se {se:.4}", a.r, b.r));
    }
    let devs: Vec<String> = reps.iter().map(|r| format!("{:.4}", r.max_deviation)).collect();
    Ok((ok, format!("max deviations [{}]; {}", devs.join(", "), parts.join("; "))))
}

fn cli(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_alphadecay"))
        .args(args)
        .output()
        .map_err(e)?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))
    }
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> Result<bool, String> {
    for n in names {
        if std::fs::read(a.join(n)).map_err(e)? != std::fs::read(b.join(n)).map_err(e)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn reproducibility(_: &mut Vec<String>) -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let d = |n: &str| data.join(n).display().to_string();
    let out = |n: &str| tmp.path().join(n).display().to_string();
    let mut parts = Vec::new();
    let mut ok = true;
    let experiments: Vec<(&str, Vec<String>, Vec<&str>)> = vec![
        (
            "decay-experiment",
            ["decay-experiment", "--spec", &d("tilt.json"), "--domain", &d("ball.json"), "--z", "1,0", "--n", "2000", "--seed", "7", "--csv"]
                .map(String::from)
                .to_vec(),
            vec!["result.json", "rays.csv"],
        ),
        (
            "simulate-exit",
            ["simulate-exit", "--spec", &d("tilt.json"), "--domain", &d("ball.json"), "--x0", "0.3,0.1", "--n", "2000", "--seed", "8"]
                .map(String::from)
                .to_vec(),
            vec!["result.json", "exits.csv"],
        ),
    ];
    for (name, args, files) in experiments {
        let first = out(&format!("{name}-a"));
        let mut a: Vec<&str> = vec!["--quiet"];
        a.extend(args.iter().map(String::as_str));
        a.extend(["--out", first.as_str()]);
        cli(&a)?;
        let replay = out(&format!("{name}-replay"));
        let manifest = Path::new(&first).join("manifest.json").display().to_string();
        cli(&["--quiet", "replay", "--manifest", &manifest, "--out", &replay])?;
        let same = same_files(Path::new(&first), Path::new(&replay), &files)?;
        ok &= same;
        parts.push(format!("{name}: replay {}", if same { "byte-identical" } else { "differs" }));
    }
    Ok((ok, parts.join("; ")))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "positivity exponent vs CMS sampling", run: positivity_oracle },
        Criterion { id: 2, name: "antipodal identity", run: antipodal_identity },
        Criterion { id: 3, name: "exponent bounds", run: beta_bounds },
        Criterion { id: 4, name: "closed-form C+", run: wallis },
        Criterion { id: 5, name: "half-space harmonicity", run: halfspace_harmonicity },
        Criterion { id: 6, name: "generator boundedness near the boundary", run: generator_boundedness },
        Criterion { id: 7, name: "generator vs dense-grid oracle", run: generator_oracle },
        Criterion { id: 8, name: "sampler consistency", run: sampler_consistency },
        Criterion { id: 9, name: "half-space decay, exact values", run: exact_decay_fit },
        Criterion { id: 10, name: "half-space decay, Monte Carlo", run: halfspace_decay },
        Criterion { id: 11, name: "decay on the ball", run: ball_decay },
        Criterion { id: 12, name: "harmonic reduction", run: harmonic_reduction },
        Criterion { id: 13, name: "reproducibility from manifests", run: reproducibility },
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.trim_start_matches(|c: char| c.is_ascii_alphabetic()).parse().ok())
        .collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for c in &criteria {
        if !selected.is_empty() && !selected.contains(&c.id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let mut notes = Vec::new();
        let (pass, detail) = match (c.run)(&mut notes) {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!(
            "AC{} {} {} ({secs:.1}s): {detail}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name
        );
        for n in notes {
            println!("AC{} note: {n}", c.id);
        }
        if !pass {
            failed.push(c.id);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() && std::env::var("ALPHADECAY_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
