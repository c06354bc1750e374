//! `alphadecay`: command-line front end.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use serde_json::{json, Value};

use crate::config::{
    inline_inputs, load_config_file, merge, overlay, points_value, some, vector_value, CliError, CliResult,
};
use crate::output::{to_json, OutputLayout, ReplayCheck, RunManifest};

#[derive(Parser)]
#[command(name = "alphadecay", version, about = "Boundary decay of harmonic functions for non-symmetric stable processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, or a .json path for the result file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only warnings and errors on stderr, nothing on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    /// Log records as JSON lines.
    #[arg(long, global = true)]
    json_logs: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate C+, C- and beta over a direction grid.
    BetaMap(BetaMapArgs),
    /// Evaluate the generator at points.
    GeneratorCheck(GeneratorCheckArgs),
    /// Simulate first exits from a domain.
    SimulateExit(SimulateExitArgs),
    /// Fit the boundary decay exponent along the normal at z.
    DecayExperiment(DecayArgs),
    /// Compare g with its harmonic reduction near z.
    ReductionCheck(ReductionArgs),
    /// Check a spec (and optionally a domain) against the model assumptions.
    Validate(ValidateArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct BetaMapArgs {
    /// Spec JSON file.
    #[arg(long)]
    spec: Option<String>,
    /// Number of directions.
    #[arg(long)]
    dirs: Option<usize>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct GeneratorCheckArgs {
    /// Spec JSON file.
    #[arg(long)]
    spec: Option<String>,
    /// Domain JSON file.
    #[arg(long)]
    domain: Option<String>,
    /// Points as "x1,y1;x2,y2".
    #[arg(long)]
    points: Option<String>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// g, h or bump.
    #[arg(long)]
    function: Option<String>,
}

#[derive(Args)]
struct PathArgs {
    /// Largest continuous sub-step.
    #[arg(long)]
    dt: Option<f64>,
    /// Jump truncation level away from the boundary.
    #[arg(long)]
    eps_jump: Option<f64>,
    /// Rays of the discretized spectral measure.
    #[arg(long)]
    n_rays: Option<usize>,
}

impl PathArgs {
    fn pairs(&self, prefix: &str) -> Vec<(String, Option<Value>)> {
        vec![
            (format!("{prefix}dt"), some(&self.dt)),
            (format!("{prefix}eps_jump"), some(&self.eps_jump)),
            (format!("{prefix}n_rays"), some(&self.n_rays)),
        ]
    }
}

#[derive(Args)]
struct SimulateExitArgs {
    /// Spec JSON file.
    #[arg(long)]
    spec: Option<String>,
    /// Domain JSON file.
    #[arg(long)]
    domain: Option<String>,
    /// Start point "x,y".
    #[arg(long)]
    x0: Option<String>,
    /// Number of paths.
    #[arg(long)]
    n: Option<u64>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    path: PathArgs,
}

#[derive(Args)]
struct DecayArgs {
    /// Spec JSON file.
    #[arg(long)]
    spec: Option<String>,
    /// Domain JSON file.
    #[arg(long)]
    domain: Option<String>,
    /// Boundary point "x,y".
    #[arg(long)]
    z: Option<String>,
    /// Ray distances "t1,t2,..." in normalized units.
    #[arg(long)]
    rays: Option<String>,
    /// Paths per ray point.
    #[arg(long)]
    n: Option<u64>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the ray table as CSV.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    path: PathArgs,
}

#[derive(Args)]
struct ReductionArgs {
    /// Spec JSON file.
    #[arg(long)]
    spec: Option<String>,
    /// Domain JSON file.
    #[arg(long)]
    domain: Option<String>,
    /// Boundary point "x,y".
    #[arg(long)]
    z: Option<String>,
    /// Radius of D_r, at most 1/4.
    #[arg(long)]
    r: Option<f64>,
    /// Normalized evaluation points "x1,y1;x2,y2".
    #[arg(long)]
    points: Option<String>,
    /// Paths per evaluation point.
    #[arg(long)]
    n: Option<u64>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the tolerance calibration at 2r.
    #[arg(long)]
    no_calibrate: bool,
    #[command(flatten)]
    path: PathArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Spec JSON file.
    #[arg(long)]
    spec: Option<String>,
    /// Domain JSON file.
    #[arg(long)]
    domain: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    manifest: PathBuf,
}

fn input(v: &Option<String>) -> Option<Value> {
    v.as_ref().map(|s| Value::String(s.clone()))
}

fn flag(v: bool) -> Option<Value> {
    v.then_some(Value::Bool(true))
}

fn with_path(mut pairs: Vec<(String, Option<Value>)>, path: &PathArgs, prefix: &str) -> Value {
    pairs.extend(path.pairs(prefix));
    overlay(pairs.iter().map(|(k, v)| (k.as_str(), v.clone())).collect())
}

fn owned(pairs: Vec<(&str, Option<Value>)>) -> Vec<(String, Option<Value>)> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Subcommand name and the config layer given by its flags.
fn flag_layer(cmd: &Command) -> CliResult<(&'static str, Value)> {
    Ok(match cmd {
        Command::BetaMap(a) => (
            "beta-map",
            overlay(vec![("spec", input(&a.spec)), ("dirs", some(&a.dirs)), ("quad.tol", some(&a.tol))]),
        ),
        Command::GeneratorCheck(a) => (
            "generator-check",
            overlay(vec![
                ("spec", input(&a.spec)),
                ("domain", input(&a.domain)),
                ("points", points_value(&a.points)?),
                ("quad.tol", some(&a.tol)),
                ("function", some(&a.function)),
            ]),
        ),
        Command::SimulateExit(a) => (
            "simulate-exit",
            with_path(
                owned(vec![
                    ("spec", input(&a.spec)),
                    ("domain", input(&a.domain)),
                    ("x0", vector_value(&a.x0)?),
                    ("n", some(&a.n)),
                    ("seed", some(&a.seed)),
                ]),
                &a.path,
                "path.",
            ),
        ),
        Command::DecayExperiment(a) => (
            "decay-experiment",
            with_path(
                owned(vec![
                    ("spec", input(&a.spec)),
                    ("domain", input(&a.domain)),
                    ("z", vector_value(&a.z)?),
                    ("experiment.rays", vector_value(&a.rays)?),
                    ("experiment.n_samples", some(&a.n)),
                    ("experiment.seed", some(&a.seed)),
                    ("csv", flag(a.csv)),
                ]),
                &a.path,
                "experiment.path.",
            ),
        ),
        Command::ReductionCheck(a) => (
            "reduction-check",
            with_path(
                owned(vec![
                    ("spec", input(&a.spec)),
                    ("domain", input(&a.domain)),
                    ("z", vector_value(&a.z)?),
                    ("r", some(&a.r)),
                    ("points", points_value(&a.points)?),
                    ("check.n_samples", some(&a.n)),
                    ("check.seed", some(&a.seed)),
                    ("calibrate", a.no_calibrate.then_some(Value::Bool(false))),
                ]),
                &a.path,
                "check.path.",
            ),
        ),
        Command::Validate(a) => (
            "validate",
            overlay(vec![("spec", input(&a.spec)), ("domain", input(&a.domain))]),
        ),
        Command::Replay(_) => unreachable!("replay has no config layers"),
    })
}

/// Defaults, then the config file, then flags.
fn resolve(name: &str, file: Option<&Path>, flags: Value) -> CliResult<Value> {
    let mut cfg = commands::defaults(name)?;
    if let Some(path) = file {
        merge(&mut cfg, load_config_file(path)?);
    }
    let mut flags = flags;
    inline_inputs(&mut flags, Path::new("."))?;
    merge(&mut cfg, flags);
    Ok(cfg)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

struct Session {
    layout: OutputLayout,
    threads: usize,
    quiet: bool,
}

impl Session {
    fn say(&self, line: &str) {
        if !self.quiet {
            println!("{line}");
        }
    }

    /// Runs a resolved config, writes outputs and the manifest.
    fn run(&self, name: &str, cfg: &Value, replay_of: Option<&RunManifest>, source: &str) -> CliResult<()> {
        let started = timestamp();
        info!("running {name}");
        let (canonical, seed, result) = match commands::execute(name, cfg) {
            Ok((c, s, run)) => (c, s, Ok(run)),
            Err(e) => (cfg.clone(), None, Err(e)),
        };
        let mut manifest = RunManifest {
            tool: "alphadecay".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: name.into(),
            config: canonical,
            seed,
            threads: self.threads,
            started,
            finished: String::new(),
            status: "ok".into(),
            error: None,
            outputs: Default::default(),
            replay: None,
        };
        let failure = match result {
            Ok(run) => {
                for (file, bytes) in &run.outputs.files {
                    self.layout.write(file, bytes).map_err(io_error)?;
                }
                manifest.outputs = run.outputs.digests();
                for line in &run.summary {
                    self.say(line);
                }
                run.failure
            }
            Err(e) => Some(e),
        };
        if let Some(e) = &failure {
            manifest.status = e.status().into();
            manifest.error = Some(e.message().to_string());
        }
        if let Some(prev) = replay_of {
            let mut mismatched: Vec<String> = prev
                .outputs
                .iter()
                .filter(|(k, v)| manifest.outputs.get(*k) != Some(*v))
                .map(|(k, _)| k.clone())
                .collect();
            mismatched.extend(manifest.outputs.keys().filter(|k| !prev.outputs.contains_key(*k)).cloned());
            if prev.status != manifest.status {
                mismatched.push("status".into());
            }
            let identical = mismatched.is_empty();
            self.say(if identical {
                "replay identical"
            } else {
                "replay differs"
            });
            manifest.replay = Some(ReplayCheck {
                source: source.into(),
                identical,
                mismatched,
            });
        }
        manifest.finished = timestamp();
        self.layout.write("manifest.json", &to_json(&manifest)).map_err(io_error)?;
        if let Some(e) = failure {
            return Err(e);
        }
        match &manifest.replay {
            Some(r) if !r.identical => Err(CliError::Validation(format!(
                "replay outputs differ: {}",
                r.mismatched.join(", ")
            ))),
            _ => Ok(()),
        }
    }
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::Validation(format!("cannot write output: {e}"))
}

fn init_logging(g: &Global) {
    let level = if g.quiet {
        log::LevelFilter::Warn
    } else {
        log::LevelFilter::Info
    };
    let mut b = env_logger::Builder::new();
    b.filter_level(level).parse_default_env().target(env_logger::Target::Stderr);
    if g.json_logs {
        b.format(|buf, r| {
            let line = json!({
                "ts": timestamp(),
                "level": r.level().as_str(),
                "target": r.target(),
                "msg": r.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = b.try_init();
}

fn real_main() -> CliResult<()> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                Err(CliError::Usage("invalid command line".into()))
            } else {
                Ok(())
            };
        }
    };
    init_logging(&cli.global);
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("thread pool already initialized: {e}");
        }
    }
    let threads = rayon::current_num_threads();
    if let Command::Replay(a) = &cli.command {
        let text = std::fs::read_to_string(&a.manifest)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", a.manifest.display())))?;
        let prev: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("manifest: {e}")))?;
        let out = cli.global.out.clone().unwrap_or_else(|| {
            let dir = a.manifest.parent().unwrap_or(Path::new("."));
            dir.join("replay")
        });
        let session = Session {
            layout: OutputLayout::new(&out),
            threads,
            quiet: cli.global.quiet,
        };
        let source = a.manifest.display().to_string();
        return session.run(&prev.subcommand, &prev.config, Some(&prev), &source);
    }
    let (name, flags) = flag_layer(&cli.command)?;
    let cfg = resolve(name, cli.global.config.as_deref(), flags)?;
    let out = cli.global.out.clone().unwrap_or_else(|| PathBuf::from(format!("alphadecay-{name}")));
    let session = Session {
        layout: OutputLayout::new(&out),
        threads,
        quiet: cli.global.quiet,
    };
    session.run(name, &cfg, None, "")
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            if log::max_level() == log::LevelFilter::Off {
                eprintln!("alphadecay: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
