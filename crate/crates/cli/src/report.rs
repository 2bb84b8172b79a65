//! Text summaries and CSV traces of result files.

use std::path::Path;

use anyhow::Context;
use serde_json::Value;

use crate::run::{Record, RunConfig};

fn show(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Key facts of a record, in display order.
pub fn summary(rec: &Record) -> Vec<(String, String)> {
    let r = &rec.result;
    let mut out = vec![
        ("command".to_string(), rec.config.name().to_string()),
        ("library_version".to_string(), rec.library_version.clone()),
    ];
    let mut push = |k: &str, v: String| out.push((k.to_string(), v));
    match &rec.config {
        RunConfig::Eval(_) => {
            push("k", show(&r["k"]));
            push("witness", show(&r["witness"]));
        }
        RunConfig::Optimize(c) => {
            push("dim", c.dim.to_string());
            push("k", c.k.to_string());
            push("field", c.field.to_string());
            push("rank", show(&r["rank"]));
            push("seed", c.schedule.seed.to_string());
            push("restarts", c.restarts.to_string());
            push("value", show(&r["value"]));
            push("anneal_value", show(&r["anneal_value"]));
            push("evaluations", show(&r["evaluations"]));
            push("stages", trace(rec).len().to_string());
            push("trace_final", trace(rec).last().map_or("-".into(), |v| v.to_string()));
        }
        RunConfig::ClassicalMax(c) => {
            push("k", c.k.to_string());
            push("method", show(&r["method"]));
            push("value", show(&r["value"]));
        }
        RunConfig::Simulate(c) => {
            push("shots", c.shots.to_string());
            push("trials", c.trials.to_string());
            push("seed", c.seed.to_string());
            push("witness", show(&r["witness"]));
            push("mean", show(&r["mean"]));
            push("second_moment", show(&r["second_moment"]));
            push("null_variance", show(&r["null_variance"]));
        }
        RunConfig::Detect(c) => {
            push("shots", c.shots.to_string());
            push("witness_hat", show(&r["witness_hat"]));
            push("variance", show(&r["variance"]));
            push("z_score", show(&r["z_score"]));
            push("verdict", show(&r["verdict"]));
        }
    }
    out
}

/// Best value by annealing stage; empty for runs without one.
pub fn trace(rec: &Record) -> Vec<f64> {
    rec.result["trace"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default()
}

pub fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("stage,best_value\n");
    for (i, v) in trace.iter().enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    s
}

/// Columns per record, rows per key in first-seen order.
pub fn side_by_side(names: &[String], sums: &[Vec<(String, String)>]) -> String {
    let mut keys: Vec<&String> = Vec::new();
    for s in sums {
        for (k, _) in s {
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    let cell = |s: &Vec<(String, String)>, k: &String| {
        s.iter().find(|(kk, _)| kk == k).map_or("-".to_string(), |(_, v)| v.clone())
    };
    let kw = keys.iter().map(|k| k.len()).max().unwrap_or(0).max(5);
    let widths: Vec<usize> = names
        .iter()
        .zip(sums)
        .map(|(n, s)| keys.iter().map(|k| cell(s, k).len()).max().unwrap_or(0).max(n.len()))
        .collect();
    let mut out = format!("{:<kw$}", "field");
    for (n, w) in names.iter().zip(&widths) {
        out.push_str(&format!("  {n:<w$}"));
    }
    out.push('\n');
    for k in &keys {
        out.push_str(&format!("{k:<kw$}"));
        for (s, w) in sums.iter().zip(&widths) {
            out.push_str(&format!("  {:<w$}", cell(s, k)));
        }
        out.push('\n');
    }
    out
}

pub fn run(files: &[std::path::PathBuf], csv_dir: Option<&Path>) -> anyhow::Result<()> {
    let recs = files.iter().map(|f| Record::load(f)).collect::<anyhow::Result<Vec<_>>>()?;
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned()))
        .collect();
    let sums: Vec<_> = recs.iter().map(summary).collect();
    if recs.len() == 1 {
        for (k, v) in &sums[0] {
            println!("{k}: {v}");
        }
    } else {
        print!("{}", side_by_side(&names, &sums));
    }
    if let Some(dir) = csv_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (f, rec) in files.iter().zip(&recs) {
            let stem = f.file_stem().map_or("result".into(), |s| s.to_string_lossy().into_owned());
            let path = dir.join(format!("{stem}.trace.csv"));
            std::fs::write(&path, trace_csv(&trace(rec))).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}
