//! The `ihse` command-line frontend.
//!
//! Each subcommand resolves its flags (command line first, then the optional
//! `--run-config` JSON file, then built-in defaults), runs one experiment and
//! writes a document that embeds the schema version and the fully resolved
//! settings. Exit status is 0 on success, 2 for invalid input and 3 when the
//! dynamics hit a pathology or every sample was excluded.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::io::{self, Cell};
use crate::jacobian_lab::{self, SamplingMode, TensorLemmaCase};
use crate::measure_mc::{self, Family, PBandForm, PathologicalSetSpec};
use crate::sampling::{self, TctSampleSpec};
use crate::scattering::CollisionKind;
use crate::simulator::{self, SimOptions};
use crate::system::{validate_configuration, Configuration, DomainStatus, ModelParams, Tolerances};
use crate::tct;

/// Version tag embedded in every output document.
pub const SCHEMA_VERSION: &str = "ihse/1";

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid flags, files or parameters.
pub const EXIT_INVALID: i32 = 2;
/// Exit status when the dynamics hit a pathology or nothing could be measured.
pub const EXIT_PATHOLOGY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ihse", version, about = "Inelastic hard spheres with emission: dynamics and verification lab")]
pub struct Cli {
    /// JSON object of flag values (snake_case keys); command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub run_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the event-driven dynamics on [0, T].
    Simulate(SimulateArgs),
    /// Classify a configuration against the single-collision flow domain.
    Classify(FlowArgs),
    /// Apply the single-collision flow and report both Jacobian factors.
    Flow(FlowArgs),
    /// Finite-difference check of the flow Jacobian on random configurations.
    Jacobian(JacobianArgs),
    /// Finite-difference check of the scattering-map Jacobian.
    ScatterCheck(ScatterArgs),
    /// Check the two-dimensional tensor-sum determinant identity.
    TensorLemma(LemmaArgs),
    /// Monte Carlo measure of a pathological set.
    Measure(MeasureArgs),
    /// Predicted against measured local volume change along a trajectory.
    Volume(VolumeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    E,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandArg {
    Definition,
    CutOff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Mixed,
    Inelastic,
    Elastic,
}

/// `eps0` accepts `inf` for purely elastic dynamics; JSON has no infinity,
/// so it travels as the string `"inf"`.
mod energy {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_infinite() => s.serialize_str("inf"),
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        Option::<Raw>::deserialize(d)?
            .map(|r| match r {
                Raw::Num(x) => Ok(x),
                Raw::Text(s) => s.parse::<f64>().map_err(D::Error::custom),
            })
            .transpose()
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Common {
    /// Emitted energy quantum; `inf` disables emission.
    #[arg(long)]
    #[serde(with = "energy")]
    pub eps0: Option<f64>,
    /// Spatial dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file, written atomically; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// CSV file that summary rows are appended to.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub contact_tol: Option<f64>,
    #[arg(long)]
    pub grazing_tol: Option<f64>,
    #[arg(long)]
    pub simultaneity_tol: Option<f64>,
    #[arg(long)]
    pub crit_tol: Option<f64>,
    /// Finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub max_events: Option<usize>,
}

impl Common {
    fn fill(&mut self, format: Format) {
        let tol = Tolerances::default();
        self.eps0.get_or_insert(0.75);
        self.dim.get_or_insert(2);
        self.seed.get_or_insert(0);
        self.format.get_or_insert(format);
        self.contact_tol.get_or_insert(tol.contact);
        self.grazing_tol.get_or_insert(tol.grazing);
        self.simultaneity_tol.get_or_insert(tol.simultaneity);
        self.crit_tol.get_or_insert(tol.critical);
        self.h.get_or_insert(jacobian_lab::DEFAULT_STEP);
        self.max_events.get_or_insert(SimOptions::default().max_events);
    }

    fn params(&self) -> Result<ModelParams> {
        let tolerances = Tolerances {
            contact: self.contact_tol.unwrap_or_default(),
            grazing: self.grazing_tol.unwrap_or_default(),
            simultaneity: self.simultaneity_tol.unwrap_or_default(),
            critical: self.crit_tol.unwrap_or_default(),
        };
        for (name, v) in [
            ("contact_tol", tolerances.contact),
            ("grazing_tol", tolerances.grazing),
            ("simultaneity_tol", tolerances.simultaneity),
            ("crit_tol", tolerances.critical),
            ("h", self.h.unwrap_or_default()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let eps0 = self.eps0.unwrap_or_default();
        let dim = self.dim.unwrap_or_default();
        let params = if eps0.is_infinite() && eps0 > 0.0 {
            ModelParams::elastic(dim)
        } else {
            ModelParams::new(eps0, dim)?
        };
        let params = params.with_tolerances(tolerances);
        params.validate()?;
        Ok(params)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or_default()
    }

    fn step(&self) -> f64 {
        self.h.unwrap_or(jacobian_lab::DEFAULT_STEP)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    /// Initial configuration; a random ensemble is drawn when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// End time.
    #[arg(long = "T", value_name = "T")]
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
    /// Particles in a random ensemble.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Radius of the stacked position ball for random ensembles.
    #[arg(long = "R1", value_name = "R1")]
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    /// Radius of the stacked velocity ball for random ensembles.
    #[arg(long = "R2", value_name = "R2")]
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    #[arg(long)]
    pub checkpoints: Option<usize>,
    /// Per-event CSV (time, i, j, kind, ke_before, ke_after).
    #[arg(long)]
    pub events_csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct JacobianArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Particle count; cycles through 2, 3, 4 when absent.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ScatterArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    /// Entries are drawn uniformly from [-bound, bound].
    #[arg(long)]
    pub bound: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub family: Option<FamilyArg>,
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "R1", value_name = "R1")]
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    #[arg(long = "R2", value_name = "R2")]
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, value_enum)]
    pub band: Option<BandArg>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct VolumeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Overlays the non-null command-line values on the file values.
fn merge<T: Serialize + DeserializeOwned>(cli: &T, file: Option<&Map<String, Value>>) -> Result<T> {
    let mut merged = file.cloned().unwrap_or_default();
    if let Value::Object(flags) = serde_json::to_value(cli)? {
        for (k, v) in flags {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    Ok(serde_json::from_value(Value::Object(merged))?)
}

fn load_run_config(path: Option<&Path>) -> Result<Option<Map<String, Value>>> {
    let Some(path) = path else { return Ok(None) };
    match serde_json::from_str(&std::fs::read_to_string(path)?)? {
        Value::Object(map) => Ok(Some(map)),
        _ => Err(Error::InvalidParameter(format!("{} must hold a JSON object", path.display()))),
    }
}

fn require<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")))
}

fn require_path<'a>(v: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    v.as_deref().ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")))
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    schema: &'static str,
    command: &'static str,
    config: &'a C,
    result: R,
}

/// Collected output of one command.
struct Output {
    text: String,
    status: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, status: EXIT_OK }
    }
}

fn document<C: Serialize, R: Serialize>(command: &'static str, config: &C, result: R) -> Result<String> {
    let mut text = io::to_json_pretty(&Document {
        schema: SCHEMA_VERSION,
        command,
        config,
        result,
    })?;
    text.push('\n');
    Ok(text)
}

/// A JSON-lines stream: header, one record per sample, summary.
fn json_lines<C: Serialize>(command: &'static str, config: &C, samples: &[Value], summary: &Value) -> Result<String> {
    let mut out = String::new();
    let header = json!({"record": "header", "schema": SCHEMA_VERSION, "command": command, "config": config});
    out.push_str(&io::to_json_line(&header)?);
    out.push('\n');
    for s in samples {
        out.push_str(&io::to_json_line(s)?);
        out.push('\n');
    }
    let mut summary = summary.clone();
    summary["record"] = json!("summary");
    out.push_str(&io::to_json_line(&summary)?);
    out.push('\n');
    Ok(out)
}

fn csv_unsupported(command: &str) -> Error {
    Error::Unsupported(format!("--format csv is not available for {command}"))
}

fn kind_name(kind: CollisionKind) -> &'static str {
    match kind {
        CollisionKind::Elastic => "elastic",
        CollisionKind::Inelastic => "inelastic",
    }
}

fn cmd_simulate(mut a: SimulateArgs) -> Result<Output> {
    a.common.fill(Format::Json);
    a.t_end.get_or_insert(10.0);
    a.n.get_or_insert(3);
    a.r1.get_or_insert(3.0);
    a.r2.get_or_insert(2.0);
    a.checkpoints.get_or_insert(SimOptions::default().checkpoints);
    let params = a.common.params()?;
    let t_end = positive(a.t_end.unwrap_or_default(), "T")?;
    let cfg = match &a.config {
        Some(path) => io::read_configuration(path)?,
        None => {
            let n = a.n.unwrap_or_default();
            let (r1, r2) = (positive(a.r1.unwrap_or_default(), "R1")?, positive(a.r2.unwrap_or_default(), "R2")?);
            let mut rng = sampling::sample_rng(a.common.seed(), 0);
            sampling::random_interior_configuration(&mut rng, n, params.dim, r1, r2, 1_000_000).ok_or_else(|| {
                Error::InvalidParameter(format!("no interior configuration of {n} particles found within R1 = {r1}"))
            })?
        }
    };
    let opts = SimOptions {
        max_events: a.common.max_events.unwrap_or_default(),
        checkpoints: a.checkpoints.unwrap_or_default(),
    };
    let report = simulator::simulate(&cfg, t_end, &params, &opts)?;
    let bounds = simulator::check_collision_bounds(&report, &params, &cfg);

    let header = ["time", "i", "j", "kind", "ke_before", "ke_after"];
    let rows: Vec<Vec<Cell>> = report
        .events
        .iter()
        .map(|e| {
            let [i, j] = e.pair.one_based();
            vec![e.time.into(), i.into(), j.into(), kind_name(e.kind).into(), e.ke_before.into(), e.ke_after.into()]
        })
        .collect();
    if let Some(path) = &a.events_csv {
        io::write_atomic(path, io::csv_string(&header, &rows)?.as_bytes())?;
    }
    let text = match a.common.format() {
        Format::Csv => io::csv_string(&header, &rows)?,
        Format::Json => document("simulate", &a, json!({"initial": cfg, "report": report, "bounds": bounds}))?,
        Format::Jsonl => {
            let events: Vec<Value> = report
                .events
                .iter()
                .enumerate()
                .map(|(k, e)| json!({"record": "event", "index": k, "event": e}))
                .collect();
            let summary = json!({
                "n_elastic": report.n_elastic,
                "n_inelastic": report.n_inelastic,
                "halted": report.halted,
                "min_separation": report.min_separation,
                "final": report.final_state,
                "bounds": bounds,
            });
            json_lines("simulate", &a, &events, &summary)?
        }
    };
    let status = if report.halted.is_some() || !bounds.passed() {
        EXIT_PATHOLOGY
    } else {
        EXIT_OK
    };
    Ok(Output { text, status })
}

fn flow_inputs(a: &mut FlowArgs) -> Result<(Configuration, f64, ModelParams)> {
    a.common.fill(Format::Json);
    let params = a.common.params()?;
    let tau = positive(require(a.tau, "tau")?, "tau")?;
    let cfg = io::read_configuration(require_path(&a.config, "config")?)?;
    reject_overlap(&cfg, &params)?;
    if cfg.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            found: cfg.dim(),
        });
    }
    Ok((cfg, tau, params))
}

/// Overlapping input is invalid; a touching pair is left to the
/// classification.
fn reject_overlap(cfg: &Configuration, params: &ModelParams) -> Result<()> {
    if let DomainStatus::Invalid(pairs) = validate_configuration(cfg, params.tolerances.contact)? {
        let list: Vec<String> = pairs.iter().map(|p| p.to_string()).collect();
        return Err(Error::InvalidParameter(format!("overlapping particles: {}", list.join(", "))));
    }
    Ok(())
}

fn jacobian_value(cfg: &Configuration, tau: f64, params: &ModelParams) -> Value {
    match tct::analytic_flow_jacobian_det(cfg, tau, params) {
        Ok(j) => json!(j),
        Err(e) => json!({"unavailable": e.to_string()}),
    }
}

fn cmd_classify(mut a: FlowArgs) -> Result<Output> {
    let (cfg, tau, params) = flow_inputs(&mut a)?;
    if a.common.format() == Format::Csv {
        return Err(csv_unsupported("classify"));
    }
    let class = tct::classify_tct_domain(&cfg, tau, &params);
    let result = json!({"classification": class, "jacobian": jacobian_value(&cfg, tau, &params)});
    Ok(Output::ok(document("classify", &a, result)?))
}

fn cmd_flow(mut a: FlowArgs) -> Result<Output> {
    let (cfg, tau, params) = flow_inputs(&mut a)?;
    if a.common.format() == Format::Csv {
        return Err(csv_unsupported("flow"));
    }
    let class = tct::classify_tct_domain(&cfg, tau, &params);
    if class.is_excluded() {
        let text = document("flow", &a, json!({"classification": class}))?;
        return Ok(Output {
            text,
            status: EXIT_PATHOLOGY,
        });
    }
    let res = tct::tct_flow(&cfg, tau, &params)?;
    let result = json!({
        "final": res.final_state,
        "classification": res.classification,
        "collision_record": res.collision_record,
        "jacobian": jacobian_value(&cfg, tau, &params),
    });
    Ok(Output::ok(document("flow", &a, result)?))
}

fn cmd_jacobian(mut a: JacobianArgs) -> Result<Output> {
    a.common.fill(Format::Jsonl);
    a.samples.get_or_insert(100);
    a.tau.get_or_insert(2.0);
    let params = a.common.params()?;
    let tau = positive(a.tau.unwrap_or_default(), "tau")?;
    let h = a.common.step();
    let seed = a.common.seed();
    let fixed_n = a.n;
    if fixed_n.is_some_and(|n| n < 2) {
        return Err(Error::InvalidParameter("N must be at least 2".into()));
    }
    let samples = a.samples.unwrap_or_default();
    let results: Vec<(usize, Result<jacobian_lab::JacobianReport>)> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let n = fixed_n.unwrap_or(2 + index % 3);
            let mut rng = sampling::sample_rng(seed, index as u64);
            let spec = TctSampleSpec::new(n, tau);
            let report = sampling::random_single_collision(&mut rng, &spec, &params)
                .ok_or_else(|| Error::InvalidParameter("could not draw a single-collision configuration".into()))
                .and_then(|cfg| jacobian_lab::verify_flow_jacobian(&cfg, tau, &params, h));
            (n, report)
        })
        .collect();

    let mut max_residual: Option<f64> = None;
    let mut ok = 0usize;
    let mut records = Vec::with_capacity(samples);
    let mut rows = Vec::new();
    for (index, (n, r)) in results.iter().enumerate() {
        match r {
            Ok(rep) => {
                ok += 1;
                if let Some(res) = rep.residual {
                    max_residual = Some(max_residual.map_or(res, |m: f64| m.max(res)));
                }
                records.push(json!({"record": "sample", "index": index, "N": n, "report": rep}));
                rows.push(vec![
                    index.into(),
                    (*n).into(),
                    rep.kind.map_or("free", kind_name).into(),
                    rep.analytic_det.into(),
                    rep.fd_det.into(),
                    rep.residual.into(),
                ]);
            }
            Err(e) => records.push(json!({"record": "sample", "index": index, "N": n, "error": e.to_string()})),
        }
    }
    let summary = json!({"samples": samples, "ok": ok, "failed": samples - ok, "max_residual": max_residual});
    let text = match a.common.format() {
        Format::Jsonl => json_lines("jacobian", &a, &records, &summary)?,
        Format::Json => document("jacobian", &a, json!({"samples": records, "summary": summary}))?,
        Format::Csv => io::csv_string(&["index", "N", "kind", "analytic_det", "fd_det", "residual"], &rows)?,
    };
    let status = if ok == 0 { EXIT_PATHOLOGY } else { EXIT_OK };
    Ok(Output { text, status })
}

fn cmd_scatter_check(mut a: ScatterArgs) -> Result<Output> {
    a.common.fill(Format::Jsonl);
    a.samples.get_or_insert(100);
    a.mode.get_or_insert(ModeArg::Mixed);
    let params = a.common.params()?;
    let mode = match a.mode.unwrap_or(ModeArg::Mixed) {
        ModeArg::Mixed => SamplingMode::Mixed,
        ModeArg::Inelastic => SamplingMode::InelasticOnly,
        ModeArg::Elastic => SamplingMode::ElasticOnly,
    };
    let samples = a.samples.unwrap_or_default();
    let outcomes = jacobian_lab::verify_scattering_measure_with(samples, &params, a.common.seed(), mode, a.common.step());
    let mut ok = 0usize;
    let mut max_residual: Option<f64> = None;
    let mut max_unit_deviation = 0.0f64;
    let mut records = Vec::with_capacity(samples);
    let mut rows = Vec::new();
    for out in &outcomes {
        match &out.result {
            Ok(rep) => {
                ok += 1;
                if let Some(res) = rep.residual {
                    max_residual = Some(max_residual.map_or(res, |m: f64| m.max(res)));
                }
                max_unit_deviation = max_unit_deviation.max((rep.fd_det.abs() - 1.0).abs());
                records.push(json!({"record": "sample", "index": out.index, "report": rep}));
                rows.push(vec![
                    out.index.into(),
                    rep.kind.map_or("", kind_name).into(),
                    rep.relative_speed_sq.into(),
                    rep.analytic_det.into(),
                    rep.fd_det.into(),
                    rep.residual.into(),
                ]);
            }
            Err(e) => records.push(json!({"record": "sample", "index": out.index, "error": e.to_string()})),
        }
    }
    let summary = json!({
        "samples": samples,
        "ok": ok,
        "failed": samples - ok,
        "max_residual": max_residual,
        "max_abs_det_deviation_from_one": max_unit_deviation,
    });
    let text = match a.common.format() {
        Format::Jsonl => json_lines("scatter-check", &a, &records, &summary)?,
        Format::Json => document("scatter-check", &a, json!({"samples": records, "summary": summary}))?,
        Format::Csv => io::csv_string(&["index", "kind", "relative_speed_sq", "analytic_det", "fd_det", "residual"], &rows)?,
    };
    let status = if ok == 0 { EXIT_PATHOLOGY } else { EXIT_OK };
    Ok(Output { text, status })
}

fn cmd_tensor_lemma(mut a: LemmaArgs) -> Result<Output> {
    a.common.fill(Format::Json);
    a.samples.get_or_insert(10_000);
    a.bound.get_or_insert(1.0);
    let bound = positive(a.bound.unwrap_or_default(), "bound")?;
    let seed = a.common.seed();
    let cases: Vec<(TensorLemmaCase, f64, f64)> = (0..a.samples.unwrap_or_default() as u64)
        .into_par_iter()
        .map(|i| {
            let case = TensorLemmaCase::random(&mut sampling::sample_rng(seed, i), bound);
            let (f, d) = jacobian_lab::tensor_sum_det(&case);
            (case, f, d)
        })
        .collect();
    let max_abs_diff = cases.iter().map(|(_, f, d)| (f - d).abs()).fold(0.0, f64::max);
    let max_scaled_diff = cases
        .iter()
        .map(|(c, f, d)| (f - d).abs() / c.scale())
        .fold(0.0, f64::max);
    let summary = json!({"samples": cases.len(), "max_abs_diff": max_abs_diff, "max_scaled_diff": max_scaled_diff});
    let text = match a.common.format() {
        Format::Json => document("tensor-lemma", &a, summary)?,
        Format::Jsonl => {
            let records: Vec<Value> = cases
                .iter()
                .enumerate()
                .map(|(i, (c, f, d))| json!({"record": "sample", "index": i, "case": c, "formula": f, "direct": d}))
                .collect();
            json_lines("tensor-lemma", &a, &records, &summary)?
        }
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = cases
                .iter()
                .enumerate()
                .map(|(i, (c, f, d))| {
                    vec![
                        i.into(),
                        c.lambda.into(),
                        c.mu.into(),
                        c.nu.into(),
                        c.u[0].into(),
                        c.u[1].into(),
                        c.omega[0].into(),
                        c.omega[1].into(),
                        (*f).into(),
                        (*d).into(),
                    ]
                })
                .collect();
            io::csv_string(
                &["index", "lambda", "mu", "nu", "u_x", "u_y", "omega_x", "omega_y", "formula", "direct"],
                &rows,
            )?
        }
    };
    Ok(Output::ok(text))
}

const MEASURE_CSV: [&str; 4] = ["delta", "mu", "estimate", "ci95"];

fn cmd_measure(mut a: MeasureArgs) -> Result<Output> {
    a.common.fill(Format::Json);
    let family = *a.family.get_or_insert(FamilyArg::E);
    a.n.get_or_insert(3);
    a.k.get_or_insert(0);
    a.delta.get_or_insert(0.1);
    a.r1.get_or_insert(2.0);
    a.r2.get_or_insert(1.0);
    a.samples.get_or_insert(100_000);
    a.band.get_or_insert(BandArg::Definition);
    if family == FamilyArg::P {
        a.mu.get_or_insert(0.5);
    }
    let params = a.common.params()?;
    let spec = PathologicalSetSpec {
        family: match family {
            FamilyArg::E => Family::E,
            FamilyArg::P => Family::P,
        },
        n_particles: a.n.unwrap_or_default(),
        k: a.k.unwrap_or_default(),
        delta: a.delta.unwrap_or_default(),
        mu: a.mu,
        r1: a.r1.unwrap_or_default(),
        r2: a.r2.unwrap_or_default(),
        params,
        band: match a.band.unwrap_or(BandArg::Definition) {
            BandArg::Definition => PBandForm::Definition,
            BandArg::CutOff => PBandForm::CutOff,
        },
    };
    let est = measure_mc::estimate_pathological_measure(&spec, a.samples.unwrap_or_default(), a.common.seed())?;
    let row = vec![vec![est.spec.delta.into(), est.spec.mu.into(), est.volume.into(), est.ci95.into()]];
    if let Some(path) = &a.common.csv {
        io::append_csv(path, &MEASURE_CSV, &row)?;
    }
    let text = match a.common.format() {
        Format::Csv => io::csv_string(&MEASURE_CSV, &row)?,
        Format::Json => document("measure", &a, est)?,
        Format::Jsonl => {
            let mut line = io::to_json_line(&json!({"schema": SCHEMA_VERSION, "command": "measure", "config": a, "result": est}))?;
            line.push('\n');
            line
        }
    };
    Ok(Output::ok(text))
}

const VOLUME_CSV: [&str; 4] = ["radius", "tau", "predicted", "measured"];

fn cmd_volume(mut a: VolumeArgs) -> Result<Output> {
    a.common.fill(Format::Json);
    a.radius.get_or_insert(1e-5);
    let params = a.common.params()?;
    let tau = positive(require(a.tau, "tau")?, "tau")?;
    let radius = positive(a.radius.unwrap_or_default(), "radius")?;
    let cfg = io::read_configuration(require_path(&a.config, "config")?)?;
    reject_overlap(&cfg, &params)?;
    let vol = measure_mc::ensemble_volume_evolution(&cfg, radius, tau, &params)?;
    let row = vec![vec![radius.into(), tau.into(), vol.predicted.into(), vol.measured.into()]];
    if let Some(path) = &a.common.csv {
        io::append_csv(path, &VOLUME_CSV, &row)?;
    }
    let text = match a.common.format() {
        Format::Csv => io::csv_string(&VOLUME_CSV, &row)?,
        Format::Json => document("volume", &a, &vol)?,
        Format::Jsonl => {
            let mut line = io::to_json_line(&json!({"schema": SCHEMA_VERSION, "command": "volume", "config": a, "result": vol}))?;
            line.push('\n');
            line
        }
    };
    Ok(Output::ok(text))
}

/// Output path of a resolved command, read back from its merged flags.
fn output_path(cmd: &Command, file: Option<&Map<String, Value>>) -> Result<Option<PathBuf>> {
    let cli_output = match cmd {
        Command::Simulate(a) => &a.common.output,
        Command::Classify(a) | Command::Flow(a) => &a.common.output,
        Command::Jacobian(a) => &a.common.output,
        Command::ScatterCheck(a) => &a.common.output,
        Command::TensorLemma(a) => &a.common.output,
        Command::Measure(a) => &a.common.output,
        Command::Volume(a) => &a.common.output,
    };
    if cli_output.is_some() {
        return Ok(cli_output.clone());
    }
    match file.and_then(|m| m.get("output")) {
        Some(v) if !v.is_null() => Ok(Some(serde_json::from_value(v.clone())?)),
        _ => Ok(None),
    }
}

fn dispatch(cli: Cli) -> Result<Output> {
    let file = load_run_config(cli.run_config.as_deref())?;
    let file = file.as_ref();
    let output = output_path(&cli.command, file)?;
    let out = match &cli.command {
        Command::Simulate(a) => cmd_simulate(merge(a, file)?),
        Command::Classify(a) => cmd_classify(merge(a, file)?),
        Command::Flow(a) => cmd_flow(merge(a, file)?),
        Command::Jacobian(a) => cmd_jacobian(merge(a, file)?),
        Command::ScatterCheck(a) => cmd_scatter_check(merge(a, file)?),
        Command::TensorLemma(a) => cmd_tensor_lemma(merge(a, file)?),
        Command::Measure(a) => cmd_measure(merge(a, file)?),
        Command::Volume(a) => cmd_volume(merge(a, file)?),
    }?;
    match output {
        Some(path) => io::write_atomic(&path, out.text.as_bytes())?,
        None => print!("{}", out.text),
    }
    Ok(out)
}

/// Caps the global thread pool from `IHSE_THREADS`, if set.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("IHSE_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("IHSE_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(Error::InvalidParameter("IHSE_THREADS must be positive".into()));
    }
    // A pool that already exists (a second call in-process) is left as is.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Unsupported(_)) {
        EXIT_INVALID
    } else {
        EXIT_PATHOLOGY
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("ihse: {e}");
        return EXIT_INVALID;
    }
    match dispatch(cli) {
        Ok(out) => out.status,
        Err(e) => {
            eprintln!("ihse: {e}");
            exit_code(&e)
        }
    }
}
