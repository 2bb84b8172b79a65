//! Replayable run configurations and the result records they produce.
//!
//! A record holds the full configuration of a run next to its numeric
//! output. `execute` is a pure function of the configuration, so replaying
//! a record reproduces its `result` value exactly.

use std::path::Path;

use anyhow::{bail, Context};
use dimwit::classical::{self, BinarySchedule};
use dimwit::detect::{self, ShotData};
use dimwit::optimizer::{self, AngleParametrization, AnnealSchedule, MultiStart, OptimizationResult, RefineOptions};
use dimwit::{io, minimal_counts, registry, Field, ProbabilityMatrix, Scenario};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const RECORD_FORMAT: &str = "dimwit-result";
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Eval(EvalConfig),
    Optimize(OptimizeConfig),
    ClassicalMax(ClassicalConfig),
    Simulate(SimulateConfig),
    Detect(DetectConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Eval(_) => "eval",
            RunConfig::Optimize(_) => "optimize",
            RunConfig::ClassicalMax(_) => "classical-max",
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Detect(_) => "detect",
        }
    }
}

/// Either a scenario or a bare probability matrix (all `k+1` rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub dim: usize,
    pub k: usize,
    pub field: Field,
    /// `"auto"` or a uniform effect rank.
    pub rank_profile: String,
    pub schedule: AnnealSchedule,
    pub restarts: usize,
    pub refine: Option<RefineOptions>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConfig {
    pub k: usize,
    pub exhaustive: bool,
    pub schedule: BinarySchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub scenario: Value,
    pub shots: u64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub scenario: Value,
    pub shots: u64,
    /// `k` rows of `k+1` positive counts.
    pub counts: Vec<Vec<u64>>,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub format: String,
    pub version: u32,
    pub library_version: String,
    pub config: RunConfig,
    pub result: Value,
}

impl Record {
    pub fn new(config: RunConfig, result: Value) -> Self {
        Self {
            format: RECORD_FORMAT.to_string(),
            version: RECORD_VERSION,
            library_version: dimwit::VERSION.to_string(),
            config,
            result,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let rec: Record = serde_json::from_str(&text)
            .map_err(dimwit::Error::from)
            .with_context(|| format!("parsing {}", path.display()))?;
        if rec.format != RECORD_FORMAT {
            bail!(dimwit::Error::Parse(format!("{} is not a result file", path.display())));
        }
        Ok(rec)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        write_json(path, &serde_json::to_value(self)?)
    }
}

pub fn write_json(path: &Path, v: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn execute(config: &RunConfig) -> anyhow::Result<Value> {
    match config {
        RunConfig::Eval(c) => eval(c),
        RunConfig::Optimize(c) => optimize(c),
        RunConfig::ClassicalMax(c) => classical_max(c),
        RunConfig::Simulate(c) => simulate(c),
        RunConfig::Detect(c) => detect(c),
    }
}

fn eval(c: &EvalConfig) -> anyhow::Result<Value> {
    match (&c.scenario, &c.matrix) {
        (Some(s), None) => {
            let s = io::scenario_from_value(s)?;
            let rep = dimwit::witness::evaluate(&s)?;
            Ok(json!({
                "witness": rep.witness,
                "abs_witness": rep.witness.abs(),
                "k": s.k(),
                "dim": s.dim(),
                "field": s.field(),
                "threshold_k": minimal_counts(s.dim(), s.field().into()).0,
                "scenario_digest": rep.scenario_digest,
                "probability_matrix": rep.probability_matrix.rows(),
            }))
        }
        (None, Some(rows)) => {
            let pm = ProbabilityMatrix::from_rows(rows)?;
            let w = dimwit::witness(&pm);
            if !w.is_finite() {
                bail!(dimwit::Error::NumericIntegrity("witness is not finite".into()));
            }
            Ok(json!({
                "witness": w,
                "abs_witness": w.abs(),
                "k": pm.k(),
                "probability_matrix": rows,
            }))
        }
        _ => bail!(dimwit::Error::Structural("eval needs exactly one of a scenario and a matrix".into())),
    }
}

fn run_json(r: &OptimizationResult) -> Value {
    json!({
        "anneal_value": r.best_value,
        "refined_value": r.refined_value,
        "value": r.value(),
        "angles": r.best_angles,
        "evaluations": r.evaluations,
        "seed": r.seed,
        "trace": r.trace,
        "scenario": io::scenario_to_value(&r.best_scenario),
    })
}

fn optimize(c: &OptimizeConfig) -> anyhow::Result<Value> {
    let refine = c.refine.as_ref();
    let (rank, best, runs): (usize, MultiStart, Vec<Value>) = if c.rank_profile == "auto" {
        let sweep = optimizer::rank_sweep(c.dim, c.k, c.field, &c.schedule, c.restarts, refine)?;
        let runs = sweep
            .runs
            .iter()
            .map(|(t, m)| json!({ "rank": t, "value": m.best.value(), "restart_values": m.values }))
            .collect();
        let (t, m) = sweep.runs[sweep.argmax].clone();
        (t, m, runs)
    } else {
        let t: usize = c
            .rank_profile
            .parse()
            .map_err(|_| dimwit::Error::Parse(format!("rank profile `{}` is not `auto` or an integer", c.rank_profile)))?;
        let par = AngleParametrization::uniform(c.dim, c.field, c.k, t)?;
        let m = optimizer::optimize(&par, &c.schedule, c.restarts, refine)?;
        (t, m, Vec::new())
    };
    let mut out = run_json(&best.best);
    let obj = out.as_object_mut().expect("run json is an object");
    obj.insert("rank".into(), json!(rank));
    obj.insert("best_restart".into(), json!(best.best_restart));
    obj.insert("restart_values".into(), json!(best.values));
    obj.insert("hadamard_bound".into(), json!(classical::hadamard_bound(c.k)));
    if let Some(t) = registry::table_value(c.k, c.dim, c.field) {
        obj.insert("table_value".into(), json!(t.precise.unwrap_or(t.rounded)));
    }
    if !runs.is_empty() {
        obj.insert("rank_runs".into(), Value::Array(runs));
    }
    Ok(out)
}

fn classical_max(c: &ClassicalConfig) -> anyhow::Result<Value> {
    let (value, m, method) = if c.exhaustive {
        let (v, m) = classical::exhaustive_binary_max(c.k)?;
        (v, m, "exhaustive")
    } else {
        let (v, m) = classical::binary_anneal_max(c.k, &c.schedule)?;
        (v, m, "anneal")
    };
    let known = classical::CLASSICAL_MAXIMA.get(c.k.wrapping_sub(1)).copied();
    Ok(json!({
        "k": c.k,
        "method": method,
        "value": value,
        "known_maximum": known,
        "hadamard_bound": classical::hadamard_bound(c.k),
        "matrix": m.full_matrix(),
    }))
}

/// Null variance when the scenario sits at or one above its threshold.
fn null_model(s: &Scenario, shots: u64) -> anyhow::Result<Option<(detect::Order, f64)>> {
    let Ok(order) = detect::variance_order(s.dim(), s.field(), s.k()) else {
        return Ok(None);
    };
    let pm = dimwit::build_probability_matrix(s)?;
    let v = match order {
        detect::Order::First => detect::null_variance(&pm, shots)?,
        detect::Order::Second => detect::null_variance_second(&pm, shots)?,
    };
    Ok(Some((order, v)))
}

fn simulate(c: &SimulateConfig) -> anyhow::Result<Value> {
    let s = io::scenario_from_value(&c.scenario)?;
    let pm = dimwit::build_probability_matrix(&s)?;
    let ws = detect::simulate_witness_trials(&pm, c.shots, c.trials, c.seed)?;
    let t = ws.len().max(1) as f64;
    let mean = ws.iter().sum::<f64>() / t;
    let second_moment = ws.iter().map(|w| w * w).sum::<f64>() / t;
    let null = null_model(&s, c.shots)?;
    let (order, null_variance) = (null.map(|n| n.0), null.map(|n| n.1));
    Ok(json!({
        "witness": dimwit::witness(&pm),
        "mean": mean,
        "second_moment": second_moment,
        "null_variance": null_variance,
        "order": order,
        "witness_hats": ws,
    }))
}

fn detect(c: &DetectConfig) -> anyhow::Result<Value> {
    let s = io::scenario_from_value(&c.scenario)?;
    let shots = ShotData::from_rows(c.shots, &c.counts, None)?;
    let rep = detect::detect(&s, &shots, c.z)?;
    let order = detect::variance_order(s.dim(), s.field(), s.k())?;
    let mut v = serde_json::to_value(&rep)?;
    v.as_object_mut().expect("report is an object").insert("order".into(), json!(order));
    Ok(v)
}
