//! Configuration files and the `analyze`, `verify`, `spectrum` and `presets`
//! pipelines behind the `coupled-heat` binary.
//!
//! Exit codes: 0 success, 1 a prediction was refuted, 2 configuration error,
//! 3 numerical failure, 4 spectrum requested for a non-symmetric scenario.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analyzer::{
    default_targets, predict, preset, verify, CoefficientSpec, PredictionSet, Preset, Report, ScenarioSpec, SimConfig,
    Target, Verdict, SCHEMA_VERSION,
};
use crate::error::Error;
use crate::forms::{assemble, build_mesh, MassKind, Scenario};
use crate::semigroup::{eigenpairs, Scheme, TimeConfig, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_SYMMETRIC: i32 = 4;

const DEFAULT_ELEMENTS: usize = 32;
const DEFAULT_MAX_FRAMES: usize = 200;
const DEFAULT_EIGENPAIRS: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("scenario is not symmetric; use `verify` to study its evolution")]
    NotSymmetric,
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::Io { .. } => EXIT_NUMERICAL,
            CliError::NotSymmetric => EXIT_NOT_SYMMETRIC,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

/// Errors from assembly are configuration mistakes; errors during solves are
/// numerical.
fn classify(e: Error) -> CliError {
    match e {
        Error::SingularStep { .. } | Error::NotPositiveDefinite | Error::NormUnderflow => CliError::Numerical(e),
        Error::NotSymmetric => CliError::NotSymmetric,
        other => CliError::Config(other.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "coupled-heat",
    version,
    about = "Coupled vector-valued heat flow on (0,1): predict and verify invariance properties"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict properties from the algebraic criteria and write predictions.json.
    Analyze(RunArgs),
    /// Predict (or load predictions), simulate, and write report.json plus trajectory CSVs.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Predictions file written by `analyze`, used instead of fresh predictions.
        #[arg(long, value_name = "PATH")]
        predictions: Option<PathBuf>,
    },
    /// Smallest eigenpairs of a symmetric scenario as CSV.
    Spectrum {
        #[command(flatten)]
        run: RunArgs,
        /// Number of eigenpairs.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        mass: Option<MassArg>,
    },
    /// List the named scenarios.
    Presets,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Preset to use when no config is given (e.g. `kirchhoff`, `robin:2`).
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Number of components for `--preset`.
    #[arg(long, requires = "preset")]
    pub m: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_elements: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MassArg {
    Lumped,
    Consistent,
}

impl From<MassArg> for MassKind {
    fn from(m: MassArg) -> Self {
        match m {
            MassArg::Lumped => MassKind::Lumped,
            MassArg::Consistent => MassKind::Consistent,
        }
    }
}

/// The `[scenario]` table: a preset plus optional overrides.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub rho: Option<f64>,
    pub m: Option<usize>,
    pub name: Option<String>,
    pub diffusion: Option<CoefficientSpec>,
    /// Boundary operator at both ends.
    pub s: Option<Vec<Vec<f64>>>,
    pub s_left: Option<Vec<Vec<f64>>>,
    pub s_right: Option<Vec<Vec<f64>>>,
    /// Generators of the boundary subspace at both ends; `[]` is `{0}`.
    pub y: Option<Vec<Vec<f64>>>,
    pub y_left: Option<Vec<Vec<f64>>>,
    pub y_right: Option<Vec<Vec<f64>>>,
    pub potential: Option<CoefficientSpec>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_elements: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Option<Scheme>,
    pub mass: Option<MassKind>,
    pub record_every: Option<usize>,
}

/// A target as written in TOML; infinite interval bounds are `inf`/`-inf`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    Positivity,
    LinfContraction,
    Interval { lower: Vec<f64>, upper: Vec<f64> },
    SubspaceInvariance { generators: Vec<Vec<f64>> },
    Irreducibility,
    Symmetry,
    Stability,
    Domination { dominating: Box<ScenarioConfig> },
    ScalarDomination,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
    pub targets: Option<Vec<TargetConfig>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub k: Option<usize>,
    pub mass: Option<MassKind>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub trajectories: Option<bool>,
    pub max_frames: Option<usize>,
}

/// The whole configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    /// Parses TOML; the error message carries the line, column and key.
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(&path.display().to_string(), e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

fn check_matrix(field: &str, rows: &[Vec<f64>], m: usize) -> CliResult<()> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(config_err(field, format!("expected a {m}×{m} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(config_err(field, "entries must be finite"));
    }
    Ok(())
}

fn check_coefficient(field: &str, c: &CoefficientSpec, m: usize) -> CliResult<()> {
    match c {
        CoefficientSpec::Constant(rows) => check_matrix(field, rows, m),
        CoefficientSpec::PerElement(blocks) => blocks
            .iter()
            .enumerate()
            .try_for_each(|(e, b)| check_matrix(&format!("{field}[{e}]"), b, m)),
    }
}

fn check_generators(field: &str, gens: &[Vec<f64>], m: usize) -> CliResult<()> {
    for (i, g) in gens.iter().enumerate() {
        if g.len() != m {
            return Err(config_err(
                &format!("{field}[{i}]"),
                format!("expected {m} entries, found {}", g.len()),
            ));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(config_err(&format!("{field}[{i}]"), "entries must be finite"));
        }
    }
    Ok(())
}

/// Builds the scenario described by a `[scenario]`-style table. `prefix`
/// names the table in diagnostics; `default_m` is used when `m` is absent.
pub fn build_scenario(cfg: &ScenarioConfig, prefix: &str, default_m: Option<usize>) -> CliResult<Scenario> {
    let field = |f: &str| format!("{prefix}.{f}");
    let m = cfg
        .m
        .or(default_m)
        .or(match &cfg.diffusion {
            Some(CoefficientSpec::Constant(rows)) => Some(rows.len()),
            _ => None,
        })
        .ok_or_else(|| config_err(&field("m"), "missing (number of components)"))?;
    if m == 0 {
        return Err(config_err(&field("m"), "must be at least 1"));
    }
    let name = cfg.preset.as_deref().unwrap_or("custom");
    if cfg.rho.is_some() && !name.eq_ignore_ascii_case("robin") {
        return Err(config_err(&field("rho"), "only valid with preset = \"robin\""));
    }
    let p = Preset::parse(name, cfg.rho).map_err(|_| {
        config_err(
            &field("preset"),
            format!("unknown preset `{name}` (expected one of {})", Preset::NAMES.join(", ")),
        )
    })?;
    let base = preset(&p, m).map_err(|e| config_err(prefix, e))?;
    let mut spec = ScenarioSpec::from_scenario(&base);
    if let Some(n) = &cfg.name {
        spec.name = n.clone();
    }
    if let Some(d) = &cfg.diffusion {
        check_coefficient(&field("diffusion"), d, m)?;
        spec.diffusion = d.clone();
    }
    if let Some(s) = &cfg.s {
        check_matrix(&field("s"), s, m)?;
        spec.s_left = s.clone();
        spec.s_right = s.clone();
    }
    for (key, value, slot) in [
        ("s_left", &cfg.s_left, &mut spec.s_left),
        ("s_right", &cfg.s_right, &mut spec.s_right),
    ] {
        if let Some(s) = value {
            if cfg.s.is_some() {
                return Err(config_err(&field(key), "conflicts with `s`"));
            }
            check_matrix(&field(key), s, m)?;
            *slot = s.clone();
        }
    }
    if let Some(y) = &cfg.y {
        check_generators(&field("y"), y, m)?;
        spec.y_left = y.clone();
        spec.y_right = y.clone();
    }
    for (key, value, slot) in [
        ("y_left", &cfg.y_left, &mut spec.y_left),
        ("y_right", &cfg.y_right, &mut spec.y_right),
    ] {
        if let Some(y) = value {
            if cfg.y.is_some() {
                return Err(config_err(&field(key), "conflicts with `y`"));
            }
            check_generators(&field(key), y, m)?;
            *slot = y.clone();
        }
    }
    if let Some(c) = &cfg.potential {
        check_coefficient(&field("potential"), c, m)?;
        spec.potential = Some(c.clone());
    }
    if let Some(g) = cfg.gamma {
        if !g.is_finite() || g <= 0.0 {
            return Err(config_err(&field("gamma"), "must be positive"));
        }
        spec.gamma = g;
    }
    spec.to_scenario().map_err(|e| config_err(prefix, e))
}

fn build_target(t: &TargetConfig, i: usize, m: usize) -> CliResult<Target> {
    let field = format!("verify.targets[{i}]");
    Ok(match t {
        TargetConfig::Positivity => Target::Positivity,
        TargetConfig::LinfContraction => Target::LinfContraction,
        TargetConfig::Interval { lower, upper } => {
            if lower.len() != m || upper.len() != m {
                return Err(config_err(&field, format!("lower and upper need {m} entries")));
            }
            if let Some(k) = (0..m).find(|&k| lower[k].is_nan() || upper[k].is_nan() || lower[k] > upper[k]) {
                return Err(config_err(&field, format!("empty interval in component {k}")));
            }
            Target::interval(lower, upper)
        }
        TargetConfig::SubspaceInvariance { generators } => {
            check_generators(&format!("{field}.generators"), generators, m)?;
            Target::SubspaceInvariance {
                generators: generators.clone(),
            }
        }
        TargetConfig::Irreducibility => Target::Irreducibility,
        TargetConfig::Symmetry => Target::Symmetry,
        TargetConfig::Stability => Target::Stability,
        TargetConfig::Domination { dominating } => {
            let other = build_scenario(dominating, &format!("{field}.dominating"), Some(m))?;
            if other.m != m {
                return Err(config_err(&format!("{field}.dominating.m"), format!("must equal {m}")));
            }
            Target::dominated_by(&other)
        }
        TargetConfig::ScalarDomination => Target::ScalarDomination,
    })
}

/// Everything a pipeline needs, after validation and flag overrides.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub targets: Vec<Target>,
    pub sim: SimConfig,
    pub out: PathBuf,
    pub trajectories: bool,
    pub max_frames: usize,
    pub spectrum_k: Option<usize>,
    pub spectrum_mass: Option<MassKind>,
}

pub fn resolve(cfg: &RunConfig, args: &RunArgs) -> CliResult<Resolved> {
    let scenario = build_scenario(&cfg.scenario, "scenario", None)?;
    let n = args.n_elements.or(cfg.mesh.n_elements).unwrap_or(DEFAULT_ELEMENTS);
    if n < 2 {
        return Err(config_err("mesh.n_elements", "must be at least 2"));
    }
    scenario.validate(n).map_err(|e| config_err("scenario", e))?;
    let mesh = build_mesh(n).map_err(|e| config_err("mesh.n_elements", e))?;
    let mut time = TimeConfig::default_for(&mesh);
    if let Some(dt) = args.dt.or(cfg.time.dt) {
        time.dt = dt;
    }
    if let Some(t) = args.t_end.or(cfg.time.t_end) {
        time.t_end = t;
    }
    if let Some(s) = cfg.time.scheme {
        time.scheme = s;
    }
    if let Some(mk) = cfg.time.mass {
        time.mass = mk;
    }
    if let Some(r) = cfg.time.record_every {
        time.record_every = r;
    }
    time.steps().map_err(|e| config_err("time", e))?;
    let mut sim = SimConfig::new(n).map_err(|e| config_err("mesh.n_elements", e))?;
    sim.time = time;
    sim.seed = args.seed.or(cfg.seed).unwrap_or(0);
    if let Some(s) = cfg.verify.samples {
        sim.samples = s;
    }
    if let Some(tol) = cfg.verify.tolerance {
        if !tol.is_finite() || tol < 0.0 {
            return Err(config_err("verify.tolerance", "must be a nonnegative number"));
        }
        sim.tolerance = tol;
    }
    let targets = match &cfg.verify.targets {
        Some(ts) => ts
            .iter()
            .enumerate()
            .map(|(i, t)| build_target(t, i, scenario.m))
            .collect::<CliResult<Vec<_>>>()?,
        None => default_targets(&scenario),
    };
    let max_frames = cfg.output.max_frames.unwrap_or(DEFAULT_MAX_FRAMES);
    if max_frames < 2 {
        return Err(config_err("output.max_frames", "must be at least 2"));
    }
    Ok(Resolved {
        scenario,
        targets,
        sim,
        out: args
            .out
            .clone()
            .or_else(|| cfg.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        trajectories: cfg.output.trajectories.unwrap_or(true),
        max_frames,
        spectrum_k: cfg.spectrum.k,
        spectrum_mass: cfg.spectrum.mass,
    })
}

fn load_config(args: &RunArgs) -> CliResult<RunConfig> {
    match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::load(path),
        (None, Some(p)) => {
            let (name, rho) = match p.split_once(':') {
                Some((n, r)) => (
                    n.to_string(),
                    Some(
                        r.trim()
                            .parse::<f64>()
                            .map_err(|_| config_err("--preset", format!("bad rho in `{p}`")))?,
                    ),
                ),
                None => (p.clone(), None),
            };
            Ok(RunConfig {
                scenario: ScenarioConfig {
                    preset: Some(name),
                    rho,
                    m: Some(args.m.unwrap_or(1)),
                    ..Default::default()
                },
                ..Default::default()
            })
        }
        (None, None) => Err(CliError::Config("either --config or --preset is required".into())),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Recorded frames with at most `max_frames` kept, evenly strided, always
/// including the first and the last.
pub fn frame_indices(len: usize, max_frames: usize) -> Vec<usize> {
    if len <= max_frames {
        return (0..len).collect();
    }
    let stride = (len - 1).div_ceil(max_frames - 1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

/// Long-format CSV `t,node_x,component,value`.
pub fn trajectory_csv(traj: &Trajectory, max_frames: usize) -> Vec<u8> {
    let m = traj.m;
    let rows = frame_indices(traj.len(), max_frames).into_iter().flat_map(move |k| {
        (0..traj.n_nodes()).flat_map(move |node| {
            (0..m).map(move |p| {
                vec![
                    traj.times[k].to_string(),
                    traj.nodes[node].to_string(),
                    p.to_string(),
                    traj.value(k, node, p).to_string(),
                ]
            })
        })
    });
    csv_bytes(&["t", "node_x", "component", "value"], rows)
}

fn fmt_pred(p: Option<bool>) -> &'static str {
    match p {
        Some(true) => "true",
        Some(false) => "false",
        None => "undecided",
    }
}

fn target_label(t: &Target) -> String {
    match t {
        Target::Domination { dominating } => format!("domination by {}", dominating.name),
        other => serde_json::to_value(other)
            .ok()
            .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
            .unwrap_or_default(),
    }
}

pub fn cmd_analyze(args: &RunArgs) -> CliResult<i32> {
    let cfg = load_config(args)?;
    let r = resolve(&cfg, args)?;
    let preds = predict(&r.scenario, &r.targets);
    let set = PredictionSet {
        schema_version: SCHEMA_VERSION.to_string(),
        scenario: ScenarioSpec::from_scenario(&r.scenario),
        predictions: preds,
    };
    let path = r.out.join("predictions.json");
    write_file(&path, &to_json(&set))?;
    for p in &set.predictions {
        println!(
            "{:<28} {:<10} {:?}",
            target_label(&p.target),
            fmt_pred(p.predicted),
            p.applicability
        );
    }
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn load_predictions(path: &Path, scenario: &Scenario) -> CliResult<Vec<crate::analyzer::Prediction>> {
    let text = fs::read_to_string(path).map_err(|e| config_err(&path.display().to_string(), e))?;
    let set: PredictionSet = serde_json::from_str(&text).map_err(|e| config_err(&path.display().to_string(), e))?;
    if set.schema_version != SCHEMA_VERSION {
        return Err(config_err(
            "schema_version",
            format!("predictions file has {}, expected {SCHEMA_VERSION}", set.schema_version),
        ));
    }
    if set.scenario != ScenarioSpec::from_scenario(scenario) {
        return Err(config_err(
            &path.display().to_string(),
            format!(
                "predictions were made for scenario `{}`, which differs from the configured `{}`",
                set.scenario.name, scenario.name
            ),
        ));
    }
    Ok(set.predictions)
}

fn report_exit_code(report: &Report) -> i32 {
    if report.any_refuted() {
        EXIT_REFUTED
    } else if report.any_failed() {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    }
}

pub fn cmd_verify(args: &RunArgs, predictions: Option<&Path>) -> CliResult<i32> {
    let cfg = load_config(args)?;
    let r = resolve(&cfg, args)?;
    let preds = match predictions {
        Some(p) => load_predictions(p, &r.scenario)?,
        None => predict(&r.scenario, &r.targets),
    };
    let report = verify(&r.scenario, &preds, &r.sim).map_err(classify)?;
    write_file(&r.out.join("report.json"), &to_json(&report))?;
    if r.trajectories {
        for (i, row) in report.rows.iter().enumerate() {
            if let Some(traj) = &row.trajectory {
                let kind = serde_json::to_value(row.prediction.property)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                let path = r.out.join("trajectories").join(format!("row{i:02}_{kind}.csv"));
                write_file(&path, &trajectory_csv(traj, r.max_frames))?;
            }
        }
    }
    for row in &report.rows {
        let worst = row
            .observation
            .as_ref()
            .map_or("-".to_string(), |o| format!("{:.3e}", o.worst_violation));
        println!(
            "{:<28} predicted={:<10} verdict={:<26} worst={worst}",
            target_label(&row.prediction.target),
            fmt_pred(row.prediction.predicted),
            format!("{:?}", row.verdict),
        );
        if let Some(e) = &row.error {
            println!("    error: {e}");
        }
    }
    let refuted = report
        .rows
        .iter()
        .filter(|r| r.verdict == Verdict::RefutedPrediction)
        .count();
    println!("wrote {} ({refuted} refuted)", r.out.join("report.json").display());
    Ok(report_exit_code(&report))
}

pub fn cmd_spectrum(args: &RunArgs, k: Option<usize>, mass: Option<MassKind>) -> CliResult<i32> {
    let cfg = load_config(args)?;
    let r = resolve(&cfg, args)?;
    let mesh = build_mesh(r.sim.n_elements).map_err(classify)?;
    let form = assemble(&r.scenario, &mesh).map_err(classify)?;
    let k = k.or(r.spectrum_k).unwrap_or(DEFAULT_EIGENPAIRS);
    if k == 0 || k > form.n_constrained() {
        return Err(config_err(
            "spectrum.k",
            format!("must be between 1 and {} for this mesh", form.n_constrained()),
        ));
    }
    let mass = mass.or(r.spectrum_mass).unwrap_or(MassKind::Consistent);
    let pairs = eigenpairs(&form, k, mass).map_err(classify)?;
    let values = csv_bytes(
        &["index", "lambda"],
        pairs
            .iter()
            .enumerate()
            .map(|(i, (l, _))| vec![i.to_string(), l.to_string()]),
    );
    let m = form.m;
    let nodes = mesh.nodes().to_vec();
    let vectors = csv_bytes(
        &["mode", "node_x", "component", "value"],
        pairs.iter().enumerate().flat_map(|(i, (_, v))| {
            let u = form.lift(v);
            let nodes = &nodes;
            (0..nodes.len())
                .flat_map(move |node| (0..m).map(move |p| (node, p)))
                .map(move |(node, p)| {
                    vec![
                        i.to_string(),
                        nodes[node].to_string(),
                        p.to_string(),
                        u[node * m + p].to_string(),
                    ]
                })
                .collect::<Vec<_>>()
        }),
    );
    write_file(&r.out.join("eigenvalues.csv"), &values)?;
    write_file(&r.out.join("eigenvectors.csv"), &vectors)?;
    for (i, (l, _)) in pairs.iter().enumerate() {
        println!("lambda_{i} = {l}");
    }
    Ok(EXIT_OK)
}

pub fn cmd_presets() -> i32 {
    for name in Preset::NAMES {
        let p = Preset::parse(name, None).expect("listed preset parses");
        println!("{name:<16} {}", p.description());
    }
    EXIT_OK
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Verify { run, predictions } => cmd_verify(run, predictions.as_deref()),
        Command::Spectrum { run, k, mass } => cmd_spectrum(run, *k, mass.map(MassKind::from)),
        Command::Presets => Ok(cmd_presets()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
