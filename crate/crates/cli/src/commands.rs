//! Subcommand implementations. Each takes a fully resolved config and
//! returns its output files; nothing here touches the filesystem.

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use alphadecay::experiments::{default_reduction_points, reduction_within, run_decay_experiment, run_reduction_check};
use alphadecay::generator::{apply_generator, boundary_power, GaussianBump, HalfspacePower};
use alphadecay::montecarlo::{rng, ExitKind, Region};
use alphadecay::projection::{beta, beta_map};
use alphadecay::spectral::Check;
use alphadecay::sphere::direction_grid;
use alphadecay::{
    DecayConfig, DomainGeometry, GeneratorQuad, GeneratorValue, HemisphereQuad, PathConfig, PathSampler, ReductionConfig, Shape,
    StableSpec, TestFunction, ValidationReport,
};

use crate::config::{CliError, CliResult};
use crate::output::{coord_columns, num, sha256_hex, to_json, Csv, Outputs};

/// What a subcommand produced. `failure` carries a non-zero outcome that
/// still comes with outputs, such as a failed validation.
pub struct Run {
    pub outputs: Outputs,
    pub summary: Vec<String>,
    pub failure: Option<CliError>,
}

impl Run {
    fn ok(outputs: Outputs, summary: Vec<String>) -> Self {
        Self {
            outputs,
            summary,
            failure: None,
        }
    }
}

/// Default resolved config of a subcommand.
pub fn defaults(name: &str) -> CliResult<Value> {
    let v = match name {
        "beta-map" => serde_json::to_value(BetaMapConfig::default()),
        "generator-check" => serde_json::to_value(GeneratorCheckConfig::default()),
        "simulate-exit" => serde_json::to_value(SimulateExitConfig::default()),
        "decay-experiment" => serde_json::to_value(DecayExperimentConfig::default()),
        "reduction-check" => serde_json::to_value(ReductionCheckConfig::default()),
        "validate" => serde_json::to_value(ValidateConfig::default()),
        _ => return Err(CliError::Usage(format!("unknown subcommand {name}"))),
    };
    Ok(v.expect("defaults serialize"))
}

/// Runs a subcommand from its resolved config. Returns the config in its
/// canonical form alongside the run.
pub fn execute(name: &str, cfg: &Value) -> CliResult<(Value, Option<u64>, Run)> {
    fn go<C: Serialize + DeserializeOwned>(
        cfg: &Value,
        seed: impl Fn(&C) -> Option<u64>,
        run: impl Fn(&C) -> CliResult<Run>,
    ) -> CliResult<(Value, Option<u64>, Run)> {
        let c: C = serde_json::from_value(cfg.clone()).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        let canonical = serde_json::to_value(&c).expect("config serializes");
        let s = seed(&c);
        Ok((canonical, s, run(&c)?))
    }
    match name {
        "beta-map" => go(cfg, |_| None, beta_map_cmd),
        "generator-check" => go(cfg, |_| None, generator_check_cmd),
        "simulate-exit" => go(cfg, |c: &SimulateExitConfig| Some(c.seed), simulate_exit_cmd),
        "decay-experiment" => go(cfg, |c: &DecayExperimentConfig| Some(c.experiment.seed), decay_cmd),
        "reduction-check" => go(cfg, |c: &ReductionCheckConfig| Some(c.check.seed), reduction_cmd),
        "validate" => go(cfg, |_| None, validate_cmd),
        _ => Err(CliError::Usage(format!("unknown subcommand {name}"))),
    }
}

fn parse_spec(v: &Value) -> CliResult<StableSpec> {
    if v.is_null() {
        return Err(CliError::Usage("--spec is required".into()));
    }
    serde_json::from_value(v.clone()).map_err(|e| CliError::Validation(format!("spec: {e}")))
}

fn valid_spec(v: &Value) -> CliResult<StableSpec> {
    let s = parse_spec(v)?;
    s.ensure_valid()?;
    Ok(s)
}

fn parse_domain(v: &Value, dim: usize) -> CliResult<DomainGeometry> {
    if v.is_null() {
        return Err(CliError::Usage("--domain is required".into()));
    }
    let d: DomainGeometry = serde_json::from_value(v.clone()).map_err(|e| CliError::Validation(format!("domain: {e}")))?;
    if d.dim() != dim {
        return Err(CliError::Validation(format!(
            "domain dimension {} differs from spec dimension {dim}",
            d.dim()
        )));
    }
    Ok(d)
}

fn check_len(what: &str, v: &[f64], dim: usize) -> CliResult<()> {
    if v.len() != dim {
        return Err(CliError::Usage(format!("{what} needs {dim} coordinates, got {}", v.len())));
    }
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaMapConfig {
    pub spec: Value,
    pub dirs: usize,
    pub quad: HemisphereQuad,
}

impl Default for BetaMapConfig {
    fn default() -> Self {
        Self {
            spec: Value::Null,
            dirs: 256,
            quad: HemisphereQuad::default(),
        }
    }
}

/// Short digest identifying ϑ and its parameters.
fn theta_hash(spec: &StableSpec) -> String {
    let v: Value = serde_json::from_str(&spec.to_json()).expect("spec JSON");
    sha256_hex(v["theta"].to_string().as_bytes())[..16].to_string()
}

fn beta_map_cmd(c: &BetaMapConfig) -> CliResult<Run> {
    let spec = valid_spec(&c.spec)?;
    if c.dirs == 0 {
        return Err(CliError::Usage("--dirs must be positive".into()));
    }
    let d = spec.dim();
    let dirs = direction_grid(d, c.dirs);
    let laws = beta_map(&spec, &dirs, &c.quad)?;
    let hash = theta_hash(&spec);
    let mut header = vec!["theta_param_hash".to_string(), "alpha".to_string()];
    header.extend(coord_columns("u", d));
    header.extend(["c_plus", "c_minus", "beta", "quad_err"].map(String::from));
    let mut csv = Csv::new(&header);
    for l in &laws {
        let mut row = vec![hash.clone(), num(spec.alpha)];
        row.extend(l.u.iter().map(|x| num(*x)));
        row.extend([num(l.c_plus), num(l.c_minus), num(l.beta), num(l.beta_err)]);
        csv.row(&row);
    }
    let lo = laws.iter().min_by(|a, b| a.beta.total_cmp(&b.beta)).expect("nonempty");
    let hi = laws.iter().max_by(|a, b| a.beta.total_cmp(&b.beta)).expect("nonempty");
    let result = json!({
        "theta_param_hash": hash,
        "alpha": spec.alpha,
        "dim": d,
        "n_dirs": laws.len(),
        "beta_min": lo.beta,
        "beta_max": hi.beta,
        "argmin": lo.u,
        "argmax": hi.u,
        "max_quad_err": laws.iter().map(|l| l.beta_err).fold(0.0, f64::max),
    });
    let mut out = Outputs::default();
    out.add("result.json", to_json(&result));
    out.add("beta_map.csv", csv.into_bytes());
    let summary = vec![format!(
        "beta in [{:.10}, {:.10}] over {} directions; argmin {} argmax {}",
        lo.beta,
        hi.beta,
        laws.len(),
        fmt_vec(&lo.u),
        fmt_vec(&hi.u)
    )];
    Ok(Run::ok(out, summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorCheckConfig {
    pub spec: Value,
    pub domain: Value,
    pub points: Vec<Vec<f64>>,
    /// `g` (boundary power of the domain), `h` (half-space power) or `bump`.
    pub function: String,
    pub quad: GeneratorQuad,
}

impl Default for GeneratorCheckConfig {
    fn default() -> Self {
        Self {
            spec: Value::Null,
            domain: Value::Null,
            points: Vec::new(),
            function: "g".to_string(),
            // The tabulated β field limits 𝒜g to about 1e-6.
            quad: GeneratorQuad {
                tol: 1e-6,
                ..GeneratorQuad::default()
            },
        }
    }
}

fn generator_check_cmd(c: &GeneratorCheckConfig) -> CliResult<Run> {
    let spec = valid_spec(&c.spec)?;
    let d = spec.dim();
    if c.points.is_empty() {
        return Err(CliError::Usage("--points is required".into()));
    }
    for p in &c.points {
        check_len("each point", p, d)?;
    }
    let dom = if c.domain.is_null() && c.function != "g" {
        None
    } else {
        Some(parse_domain(&c.domain, d)?)
    };
    if let Some(dom) = &dom {
        if let Some(p) = c.points.iter().find(|p| !dom.contains(p)) {
            return Err(CliError::Validation(format!("point {p:?} is outside the domain")));
        }
    }
    let hq = HemisphereQuad::default();
    let mut info = json!({ "function": c.function });
    let f: Box<dyn TestFunction + Sync> = match c.function.as_str() {
        "g" => {
            let g = boundary_power(&spec, dom.as_ref().expect("domain parsed"))?;
            if let Some(cut) = g.cut {
                if let Some(p) = c.points.iter().find(|p| g.dom.depth(p) >= cut) {
                    return Err(CliError::Validation(format!(
                        "point {p:?} is not closer than {cut} to the boundary, where g is cut off"
                    )));
                }
            }
            Box::new(g)
        }
        "h" => {
            let (z, u) = match dom.as_ref().map(|d| &d.shape) {
                None => (vec![0.0; d], alphadecay::linalg::unit(d, d - 1)),
                Some(Shape::HalfSpace { point, normal }) => (point.clone(), normal.clone()),
                Some(_) => return Err(CliError::Usage("function h needs a half-space domain".into())),
            };
            let b = beta(&spec, &u, &hq)?;
            info["beta"] = json!(b);
            Box::new(HalfspacePower { u, z, beta: b })
        }
        "bump" => Box::new(GaussianBump::new(vec![0.0; d], 1.0, 1.0)),
        other => return Err(CliError::Usage(format!("unknown function {other:?}; use g, h or bump"))),
    };
    // Points that miss the tolerance keep their best value and achieved error.
    let results = c
        .points
        .par_iter()
        .map(|x| match apply_generator(&spec, f.as_ref(), x, &c.quad) {
            Ok(v) => Ok((v, true)),
            Err(alphadecay::Error::NumericFailure { best, achieved, .. }) => Ok((
                GeneratorValue {
                    value: best,
                    err_estimate: achieved,
                },
                false,
            )),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let unconverged = results.iter().filter(|r| !r.1).count();
    let values: Vec<GeneratorValue> = results.into_iter().map(|r| r.0).collect();
    let mut header = coord_columns("x", d);
    header.extend(["value", "err_estimate"].map(String::from));
    let mut csv = Csv::new(&header);
    for (x, v) in c.points.iter().zip(&values) {
        let mut row: Vec<String> = x.iter().map(|t| num(*t)).collect();
        row.extend([num(v.value), num(v.err_estimate)]);
        csv.row(&row);
    }
    let max_abs = values.iter().map(|v| v.value.abs()).fold(0.0, f64::max);
    let max_err = values.iter().map(|v| v.err_estimate).fold(0.0, f64::max);
    info["n_points"] = json!(values.len());
    info["unconverged"] = json!(unconverged);
    info["tol"] = json!(c.quad.tol);
    info["max_abs_value"] = json!(max_abs);
    info["max_err_estimate"] = json!(max_err);
    let mut out = Outputs::default();
    out.add("result.json", to_json(&info));
    out.add("generator.csv", csv.into_bytes());
    let summary = vec![format!(
        "{} points: max |Af| = {max_abs:.6e}, max error estimate {max_err:.2e}",
        values.len()
    )];
    let failure = (unconverged > 0).then(|| {
        CliError::Numeric(format!(
            "{unconverged} of {} points did not reach tolerance {:e}",
            values.len(),
            c.quad.tol
        ))
    });
    Ok(Run {
        outputs: out,
        summary,
        failure,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateExitConfig {
    pub spec: Value,
    pub domain: Value,
    pub x0: Vec<f64>,
    pub n: u64,
    pub seed: u64,
    pub path: PathConfig,
}

impl Default for SimulateExitConfig {
    fn default() -> Self {
        Self {
            spec: Value::Null,
            domain: Value::Null,
            x0: Vec::new(),
            n: 1000,
            seed: 1,
            path: PathConfig::default(),
        }
    }
}

fn simulate_exit_cmd(c: &SimulateExitConfig) -> CliResult<Run> {
    let spec = valid_spec(&c.spec)?;
    let d = spec.dim();
    let dom = parse_domain(&c.domain, d)?;
    check_len("--x0", &c.x0, d)?;
    if !dom.contains(&c.x0) {
        return Err(CliError::Validation("x0 is outside the domain".into()));
    }
    if c.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let sampler = PathSampler::new(&spec, &c.path)?;
    let region = Region::single(dom);
    let exits = (0..c.n)
        .into_par_iter()
        .map(|i| sampler.sample_exit(&region, &c.x0, &mut rng(c.seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["exit_time".to_string()];
    header.extend(coord_columns("exit_", d));
    header.push("exited_by".to_string());
    let mut csv = Csv::new(&header);
    for e in &exits {
        let mut row = vec![num(e.exit_time)];
        row.extend(e.exit_point.iter().map(|t| num(*t)));
        row.push(e.exited_by.as_str().to_string());
        csv.row(&row);
    }
    let n = exits.len() as f64;
    let mean = exits.iter().map(|e| e.exit_time).sum::<f64>() / n;
    let var = exits.iter().map(|e| (e.exit_time - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let skeleton = exits.iter().filter(|e| e.exited_by == ExitKind::SkeletonStep).count() as f64 / n;
    let result = json!({
        "n": exits.len(),
        "mean_exit_time": mean,
        "mean_exit_time_se": (var / n).sqrt(),
        "skeleton_fraction": skeleton,
        "mean_steps": exits.iter().map(|e| e.path_steps as f64).sum::<f64>() / n,
        "compensation": sampler.compensation(),
    });
    let mut out = Outputs::default();
    out.add("result.json", to_json(&result));
    out.add("exits.csv", csv.into_bytes());
    let summary = vec![format!(
        "{} exits: mean exit time {mean:.6} ± {:.2e}, skeleton-step exits {:.2}%",
        exits.len(),
        (var / n).sqrt(),
        100.0 * skeleton
    )];
    Ok(Run::ok(out, summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayExperimentConfig {
    pub spec: Value,
    pub domain: Value,
    pub z: Vec<f64>,
    /// Also write the ray table as CSV.
    pub csv: bool,
    pub experiment: DecayConfig,
}

impl Default for DecayExperimentConfig {
    fn default() -> Self {
        Self {
            spec: Value::Null,
            domain: Value::Null,
            z: Vec::new(),
            csv: false,
            experiment: DecayConfig::default(),
        }
    }
}

fn decay_cmd(c: &DecayExperimentConfig) -> CliResult<Run> {
    let spec = valid_spec(&c.spec)?;
    let d = spec.dim();
    let dom = parse_domain(&c.domain, d)?;
    check_len("--z", &c.z, d)?;
    let rep = run_decay_experiment(&spec, &dom, &c.z, &c.experiment)?;
    let rays: Vec<Value> = rep.rays.iter().map(|r| json!({ "t": r.t, "value": r.value, "se": r.se })).collect();
    let mut diagnostics = serde_json::to_value(&rep.diagnostics).expect("diagnostics serialize");
    let extra = json!({
        "z": rep.z,
        "normal": rep.n,
        "fit_window": [rep.fit_window.0, rep.fit_window.1],
        "skeleton_fraction": rep.rays.iter().map(|r| r.skeleton_fraction).collect::<Vec<_>>(),
        "mean_steps": rep.rays.iter().map(|r| r.mean_steps).collect::<Vec<_>>(),
        "n_samples": c.experiment.n_samples,
    });
    crate::config::merge(&mut diagnostics, extra);
    let result = json!({
        "predicted": rep.beta_predicted,
        "fitted": rep.beta_fitted,
        "ci": rep.ci,
        "rays": rays,
        "diagnostics": diagnostics,
    });
    let mut out = Outputs::default();
    out.add("result.json", to_json(&result));
    if c.csv {
        let mut csv = Csv::new(&["t", "value", "se", "skeleton_fraction", "mean_steps"].map(String::from));
        for r in &rep.rays {
            csv.row(&[num(r.t), num(r.value), num(r.se), num(r.skeleton_fraction), num(r.mean_steps)]);
        }
        out.add("rays.csv", csv.into_bytes());
    }
    let mut summary = vec![format!(
        "predicted beta {:.6}, fitted {:.6}, ci [{:.6}, {:.6}]",
        rep.beta_predicted, rep.beta_fitted, rep.ci[0], rep.ci[1]
    )];
    if rep.diagnostics.window_sensitive {
        summary.push("warning: the fitted slope is sensitive to the ray window".into());
    }
    Ok(Run::ok(out, summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionCheckConfig {
    pub spec: Value,
    pub domain: Value,
    pub z: Vec<f64>,
    pub r: f64,
    /// Normalized evaluation points; `None` uses the default pattern.
    pub points: Option<Vec<Vec<f64>>>,
    /// Calibrate the tolerance from a run at 2r and report pass or fail.
    pub calibrate: bool,
    pub check: ReductionConfig,
}

impl Default for ReductionCheckConfig {
    fn default() -> Self {
        Self {
            spec: Value::Null,
            domain: Value::Null,
            z: Vec::new(),
            r: 0.125,
            points: None,
            calibrate: true,
            check: ReductionConfig::default(),
        }
    }
}

fn reduction_cmd(c: &ReductionCheckConfig) -> CliResult<Run> {
    let spec = valid_spec(&c.spec)?;
    let d = spec.dim();
    let dom = parse_domain(&c.domain, d)?;
    check_len("--z", &c.z, d)?;
    let points = c.points.clone().unwrap_or_else(|| default_reduction_points(d, c.r));
    let rep = run_reduction_check(&spec, &dom, &c.z, c.r, &points, &c.check)?;
    let mut summary = vec![format!(
        "r = {}: ratio in [{:.6}, {:.6}], max deviation {:.6}, max se {:.2e}",
        c.r, rep.ratio_min, rep.ratio_max, rep.max_deviation, rep.max_ratio_se
    )];
    let mut calibration = Value::Null;
    let mut passed = None;
    if c.calibrate {
        if 2.0 * c.r <= 0.25 {
            let coarse = run_reduction_check(&spec, &dom, &c.z, 2.0 * c.r, &default_reduction_points(d, 2.0 * c.r), &c.check)?;
            let eps = 2.0 * coarse.max_deviation;
            let ok = reduction_within(&rep, eps);
            summary.push(format!(
                "tolerance {eps:.6} from r = {}: {}",
                2.0 * c.r,
                if ok { "passed" } else { "failed" }
            ));
            calibration = json!({ "r": 2.0 * c.r, "max_deviation": coarse.max_deviation, "eps": eps });
            passed = Some(ok);
        } else {
            summary.push("no calibration: 2r exceeds 1/4".into());
        }
    }
    let mut header = coord_columns("x", d);
    header.extend(["g", "g_r_hat", "se", "ratio", "ratio_se"].map(String::from));
    let mut csv = Csv::new(&header);
    for p in &rep.points {
        let mut row: Vec<String> = p.x.iter().map(|t| num(*t)).collect();
        row.extend([num(p.g), num(p.g_r_hat), num(p.se), num(p.ratio), num(p.ratio_se)]);
        csv.row(&row);
    }
    let result = json!({ "report": rep, "calibration": calibration, "passed": passed });
    let mut out = Outputs::default();
    out.add("result.json", to_json(&result));
    out.add("reduction.csv", csv.into_bytes());
    let failure =
        (passed == Some(false)).then(|| CliError::Validation("ratios leave the calibrated tolerance band".into()));
    Ok(Run {
        outputs: out,
        summary,
        failure,
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub spec: Value,
    pub domain: Value,
}

fn failed_check(name: &str, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed: false,
        detail,
        witness: None,
    }
}

fn validate_cmd(c: &ValidateConfig) -> CliResult<Run> {
    let mut report = match parse_spec(&c.spec) {
        Ok(s) => s.validate(),
        Err(e) => ValidationReport {
            passed: false,
            checks: vec![failed_check("spec-parse", e.message().to_string())],
        },
    };
    if !c.domain.is_null() {
        let check = match serde_json::from_value::<DomainGeometry>(c.domain.clone()) {
            Ok(dom) => {
                let dim = c.spec.get("dim").and_then(Value::as_u64);
                match dim {
                    Some(d) if d as usize != dom.dim() => failed_check(
                        "domain-dimension",
                        format!("domain dimension {} differs from spec dimension {d}", dom.dim()),
                    ),
                    _ => Check {
                        name: "domain-regular".into(),
                        passed: true,
                        detail: format!(
                            "interior ball {:e}, exterior ball {:e}",
                            dom.interior_ball_r, dom.exterior_ball_r
                        ),
                        witness: None,
                    },
                }
            }
            Err(e) => failed_check("domain-regular", e.to_string()),
        };
        report.checks.push(check);
        report.passed = report.checks.iter().all(|c| c.passed);
    }
    let mut out = Outputs::default();
    out.add("result.json", to_json(&report));
    let mut summary: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail))
        .collect();
    let failure = (!report.passed).then(|| {
        let names: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
        CliError::Validation(format!("failed checks: {}", names.join(", ")))
    });
    summary.push(if report.passed { "valid".into() } else { "invalid".into() });
    Ok(Run {
        outputs: out,
        summary,
        failure,
    })
}
