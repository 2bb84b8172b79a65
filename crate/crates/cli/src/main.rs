//! `dimwit` command-line tool.
//!
//! Exit status: 0 on success, 1 for invalid input or usage, 2 when a
//! numeric check fails (integrity errors, failed verification, replay
//! mismatch).

mod report;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dimwit::classical::BinarySchedule;
use dimwit::detect::{self, DEFAULT_Z};
use dimwit::optimizer::{AnnealSchedule, RefineOptions};
use dimwit::{io, registry, Field};
use serde_json::{json, Value};

use run::{ClassicalConfig, DetectConfig, EvalConfig, OptimizeConfig, Record, RunConfig, SimulateConfig};

#[derive(Parser)]
#[command(name = "dimwit", version, about = "Determinant dimension witnesses: evaluate, maximize, detect")]
struct Cli {
    /// Worker threads for optimization and simulation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Witness value of a scenario or probability matrix.
    Eval {
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        scenario: Option<PathBuf>,
        /// Probability matrix CSV, all k+1 rows.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Also write the probability matrix as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Anneal over angle parametrizations to maximize |W_k|.
    Optimize(OptimizeArgs),
    /// Largest determinant of a 0/1 witness matrix.
    ClassicalMax {
        #[arg(long)]
        k: usize,
        /// Enumerate every matrix (k <= 4).
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, env = "DIMWIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = BinarySchedule::default().restarts)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Catalog of closed-form configurations.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Finite-shot witness estimates for a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Repetitions N per cell.
        #[arg(long)]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, env = "DIMWIT_SEED", default_value_t = 0)]
        seed: u64,
        /// Per-trial estimates as CSV.
        #[arg(long)]
        out: PathBuf,
        /// Result file (default: the CSV path with a .json extension).
        #[arg(long)]
        record: Option<PathBuf>,
        /// Counts of the first trial, in the format `detect` reads.
        #[arg(long)]
        counts_out: Option<PathBuf>,
    },
    /// Test measured counts against a clean scenario of the assumed dimension.
    Detect {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        counts: PathBuf,
        /// Threshold in standard deviations.
        #[arg(long, default_value_t = DEFAULT_Z)]
        z: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summaries and CSV traces of result files.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory for `<name>.trace.csv` files.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Re-run a result file and compare the numbers bit for bit.
    Replay { file: PathBuf },
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "complex")]
    field: Field,
    /// `auto` sweeps all uniform ranks up to dim/2.
    #[arg(long, default_value = "auto")]
    rank_profile: String,
    #[arg(long, env = "DIMWIT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = AnnealSchedule::default().t0)]
    t0: f64,
    #[arg(long, default_value_t = AnnealSchedule::default().ratio)]
    ratio: f64,
    #[arg(long, default_value_t = AnnealSchedule::default().precision)]
    precision: f64,
    #[arg(long, default_value_t = AnnealSchedule::default().sweeps_per_stage)]
    sweeps: usize,
    /// Override the stage count derived from t0, ratio and precision.
    #[arg(long)]
    max_stages: Option<usize>,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Skip the compass-search polish of each restart.
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// Entry names with their cells and expected values.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Rebuild entries and compare |W_k| with the expected values.
    Verify {
        #[arg(conflicts_with = "all", required_unless_present = "all")]
        name: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        json: bool,
    },
    /// Scenario JSON of one entry.
    Build {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Whole catalog, with scenarios and open targets, as JSON.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<dimwit::Error>() {
        Some(err) if err.is_numeric() => 2,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!(dimwit::Error::Structural("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    match cli.command {
        Command::Eval { scenario, matrix, csv, out } => cmd_eval(scenario, matrix, csv, out),
        Command::Optimize(a) => cmd_optimize(a),
        Command::ClassicalMax { k, exhaustive, seed, restarts, out } => {
            let schedule = BinarySchedule { seed, restarts, ..BinarySchedule::default() };
            let config = RunConfig::ClassicalMax(ClassicalConfig { k, exhaustive, schedule });
            let rec = run_and_save(config, out.as_deref())?;
            let r = &rec.result;
            println!("k = {k}  max |W_k| = {}  ({})", r["value"], r["method"].as_str().unwrap_or(""));
            if let Some(known) = r["known_maximum"].as_i64() {
                println!("known maximum: {known}");
            }
            for row in r["matrix"].as_array().into_iter().flatten() {
                let cells: Vec<String> = row.as_array().into_iter().flatten().map(|v| v.to_string()).collect();
                println!("  {}", cells.join(" "));
            }
            Ok(())
        }
        Command::Registry(c) => cmd_registry(c),
        Command::Simulate { scenario, shots, trials, seed, out, record, counts_out } => {
            cmd_simulate(&scenario, shots, trials, seed, &out, record, counts_out)
        }
        Command::Detect { scenario, counts, z, out } => cmd_detect(&scenario, &counts, z, out),
        Command::Report { files, csv_dir } => report::run(&files, csv_dir.as_deref()),
        Command::Replay { file } => cmd_replay(&file),
    }
}

fn run_and_save(config: RunConfig, out: Option<&Path>) -> anyhow::Result<Record> {
    let result = run::execute(&config)?;
    let rec = Record::new(config, result);
    if let Some(path) = out {
        rec.save(path)?;
    }
    Ok(rec)
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path)
        .map_err(dimwit::Error::from)
        .with_context(|| format!("reading {}", path.display()))
}

fn load_scenario_value(path: &Path) -> anyhow::Result<Value> {
    let s = io::scenario_from_json(&read_text(path)?).with_context(|| format!("loading {}", path.display()))?;
    Ok(io::scenario_to_value(&s))
}

fn cmd_eval(scenario: Option<PathBuf>, matrix: Option<PathBuf>, csv: Option<PathBuf>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let config = match (scenario, matrix) {
        (Some(p), None) => EvalConfig { scenario: Some(load_scenario_value(&p)?), matrix: None },
        (None, Some(p)) => {
            let pm = io::probability_matrix_from_csv(&read_text(&p)?)?;
            EvalConfig { scenario: None, matrix: Some(pm.rows()) }
        }
        _ => bail!(dimwit::Error::Structural("pass one of --scenario and --matrix".into())),
    };
    let rec = run_and_save(RunConfig::Eval(config), out.as_deref())?;
    let r = &rec.result;
    println!("W_k = {}", r["witness"]);
    println!("|W_k| = {}", r["abs_witness"]);
    println!("k = {}", r["k"]);
    if let (Some(d), Some(f), Some(t)) = (r["dim"].as_u64(), r["field"].as_str(), r["threshold_k"].as_u64()) {
        println!("dim = {d} ({f}), witness vanishes identically for k >= {t}");
    }
    if let Some(path) = csv {
        let rows: Vec<Vec<f64>> = serde_json::from_value(r["probability_matrix"].clone())?;
        let pm = dimwit::ProbabilityMatrix::from_rows(&rows)?;
        std::fs::write(&path, io::probability_matrix_to_csv(&pm)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_optimize(a: OptimizeArgs) -> anyhow::Result<()> {
    let max_stages = a.max_stages.unwrap_or_else(|| AnnealSchedule::derived_max_stages(a.t0, a.ratio, a.precision));
    let schedule = AnnealSchedule {
        t0: a.t0,
        ratio: a.ratio,
        precision: a.precision,
        max_stages,
        sweeps_per_stage: a.sweeps,
        seed: a.seed,
    };
    if a.rank_profile != "auto" && a.rank_profile.parse::<usize>().is_err() {
        bail!(dimwit::Error::Parse(format!("--rank-profile must be `auto` or an integer, got `{}`", a.rank_profile)));
    }
    let config = RunConfig::Optimize(OptimizeConfig {
        dim: a.dim,
        k: a.k,
        field: a.field,
        rank_profile: a.rank_profile,
        schedule,
        restarts: a.restarts,
        refine: (!a.no_refine).then(RefineOptions::default),
    });
    let rec = run_and_save(config, a.out.as_deref())?;
    let r = &rec.result;
    println!("max |W_k| = {}", r["value"]);
    println!("rank {}, best restart {}, evaluations {}", r["rank"], r["best_restart"], r["evaluations"]);
    if let Some(t) = r.get("table_value") {
        println!("tabulated maximum: {t}");
    }
    Ok(())
}

fn cmd_registry(c: RegistryCommand) -> anyhow::Result<()> {
    match c {
        RegistryCommand::List { json } => {
            let rows: Vec<Value> = registry::entries()
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "dim": e.dim,
                        "k": e.k,
                        "expected": e.expected(),
                        "expected_expr": e.expected_expr,
                        "maximum": e.maximum,
                        "numeric_only": e.numeric_only,
                    })
                })
                .collect();
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                for e in registry::entries() {
                    let mut tags = Vec::new();
                    if e.maximum {
                        tags.push("MAXIMUM");
                    }
                    if e.numeric_only {
                        tags.push("NUMERIC-ONLY");
                    }
                    println!("{:<28} d={} k={}  {:<20} {}", e.name, e.dim, e.k, e.expected(), tags.join(","));
                }
            }
            Ok(())
        }
        RegistryCommand::Verify { name, all, json } => {
            let results = if all { registry::verify_all()? } else { vec![registry::verify(name.as_deref().unwrap_or_default())?] };
            if json {
                println!("{}", serde_json::to_string_pretty(&results)?);
            } else {
                for v in &results {
                    let tag = if v.pass { "PASS" } else { "FAIL" };
                    println!("{tag} {:<28} computed {:<20.16} expected {:<20.16} tol {:e}", v.name, v.computed, v.expected, v.tolerance);
                    for c in &v.checks {
                        println!("     {} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
                    }
                }
            }
            let failed = results.iter().filter(|v| !v.pass).count();
            if failed > 0 {
                bail!(dimwit::Error::NumericIntegrity(format!("{failed} registry entries failed verification")));
            }
            Ok(())
        }
        RegistryCommand::Build { name, out } => {
            let text = io::scenario_to_json(&registry::build(&name)?);
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        RegistryCommand::Export { out } => {
            let v = registry::export_json()?;
            match out {
                Some(p) => run::write_json(&p, &v)?,
                None => println!("{}", serde_json::to_string_pretty(&v)?),
            }
            Ok(())
        }
    }
}

fn runs_csv(ws: &[f64]) -> String {
    let mut s = String::from("trial,witness_hat\n");
    for (t, w) in ws.iter().enumerate() {
        s.push_str(&format!("{t},{w}\n"));
    }
    s
}

fn cmd_simulate(
    scenario: &Path,
    shots: u64,
    trials: u64,
    seed: u64,
    out: &Path,
    record: Option<PathBuf>,
    counts_out: Option<PathBuf>,
) -> anyhow::Result<()> {
    let sv = load_scenario_value(scenario)?;
    let config = RunConfig::Simulate(SimulateConfig { scenario: sv.clone(), shots, trials, seed });
    let record = record.unwrap_or_else(|| out.with_extension("json"));
    if record == out {
        bail!(dimwit::Error::Structural("--record must differ from --out".into()));
    }
    let rec = run_and_save(config, Some(&record))?;
    let r = &rec.result;
    let ws: Vec<f64> = serde_json::from_value(r["witness_hats"].clone())?;
    std::fs::write(out, runs_csv(&ws)).with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = counts_out {
        let s = io::scenario_from_value(&sv)?;
        let pm = dimwit::build_probability_matrix(&s)?;
        let first = detect::simulate_shots_trial(&pm, shots, seed, 0)?;
        std::fs::write(&path, io::counts_to_csv(&first)).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("W_k = {}", r["witness"]);
    println!("mean of estimates = {}", r["mean"]);
    println!("mean square = {}", r["second_moment"]);
    if let Some(v) = r["null_variance"].as_f64() {
        println!("null variance ({} order) = {v}", r["order"].as_str().unwrap_or(""));
    }
    println!("wrote {} and {}", out.display(), record.display());
    Ok(())
}

fn cmd_detect(scenario: &Path, counts: &Path, z: f64, out: Option<PathBuf>) -> anyhow::Result<()> {
    let sv = load_scenario_value(scenario)?;
    let k = io::scenario_from_value(&sv)?.k();
    let shots = io::counts_from_csv(&read_text(counts)?, k, None).with_context(|| format!("reading {}", counts.display()))?;
    let config = RunConfig::Detect(DetectConfig { scenario: sv, shots: shots.n, counts: shots.rows(), z });
    let rec = run_and_save(config, None)?;
    let r = &rec.result;
    if let Some(path) = out {
        run::write_json(&path, r)?;
    }
    println!("witness_hat = {}", r["witness_hat"]);
    println!("variance = {} ({} order)", r["variance"], r["order"].as_str().unwrap_or(""));
    println!("z-score = {} (threshold {})", r["z_score"], r["z"]);
    println!("verdict: {}", r["verdict"].as_str().unwrap_or(""));
    Ok(())
}

fn cmd_replay(file: &Path) -> anyhow::Result<()> {
    let rec = Record::load(file)?;
    let again = run::execute(&rec.config)?;
    if again != rec.result {
        let keys: Vec<&String> = match (again.as_object(), rec.result.as_object()) {
            (Some(a), Some(b)) => a.keys().filter(|k| a.get(*k) != b.get(*k)).collect(),
            _ => Vec::new(),
        };
        bail!(dimwit::Error::NumericIntegrity(format!(
            "replay of {} differs in {:?}",
            file.display(),
            keys
        )));
    }
    if rec.library_version != dimwit::VERSION {
        eprintln!("note: recorded with version {}, replayed with {}", rec.library_version, dimwit::VERSION);
    }
    println!("replay identical: {} ({})", file.display(), rec.config.name());
    Ok(())
}
