//! Canonical JSON for scenarios and CSV for probability and count tables.
//!
//! Scenario files serialize through `serde_json::Value`, whose maps keep
//! keys sorted, and floats print in shortest round-trip form. Saving a
//! loaded file therefore reproduces it byte for byte.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::detect::ShotData;
use crate::error::{Error, Result};
use crate::scenario::{ProbabilityMatrix, Scenario};
use crate::state::{Effect, Field, Preparation, StateVector};

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn vector_json(v: &StateVector) -> Value {
    Value::Array(v.amplitudes().iter().map(|&z| complex_json(z)).collect())
}

fn matrix_json(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| complex_json(m[(r, c)])).collect()))
            .collect(),
    )
}

pub fn scenario_to_value(s: &Scenario) -> Value {
    let preps: Vec<Value> = s
        .preparations()
        .iter()
        .map(|p| match p.pure_state() {
            Some(v) => vector_json(v),
            None => json!({ "matrix": matrix_json(p.matrix()) }),
        })
        .collect();
    let effs: Vec<Value> = s
        .effects()
        .iter()
        .map(|e| match e.columns() {
            Some(cols) => json!({ "columns": cols.iter().map(vector_json).collect::<Vec<_>>() }),
            None => json!({ "matrix": matrix_json(e.matrix()) }),
        })
        .collect();
    json!({
        "dim": s.dim(),
        "field": s.field().to_string(),
        "preparations": preps,
        "effects": effs,
    })
}

/// Canonical pretty-printed JSON, newline terminated.
pub fn scenario_to_json(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&scenario_to_value(s)).expect("value serializes");
    out.push('\n');
    out
}

/// Hex SHA-256 of the compact canonical JSON.
pub fn scenario_digest(s: &Scenario) -> String {
    let compact = serde_json::to_string(&scenario_to_value(s)).expect("value serializes");
    hex::encode(Sha256::digest(compact.as_bytes()))
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn complex_from(v: &Value) -> Result<Complex64> {
    match v {
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(|| parse_err("amplitude real part is not a number"))?;
            let im = a[1].as_f64().ok_or_else(|| parse_err("amplitude imaginary part is not a number"))?;
            Ok(Complex64::new(re, im))
        }
        Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        _ => Err(parse_err("amplitude must be [re, im] or a number")),
    }
}

fn vector_from(v: &Value, field: Field) -> Result<StateVector> {
    let arr = v.as_array().ok_or_else(|| parse_err("state vector must be an array"))?;
    let amps = arr.iter().map(complex_from).collect::<Result<Vec<_>>>()?;
    StateVector::new(amps, field)
}

fn matrix_from(v: &Value) -> Result<DMatrix<Complex64>> {
    let rows = v.as_array().ok_or_else(|| parse_err("matrix must be an array of rows"))?;
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|a| a.len() == n).ok_or_else(|| parse_err("matrix must be square"))?;
        for (c, z) in row.iter().enumerate() {
            m[(r, c)] = complex_from(z)?;
        }
    }
    Ok(m)
}

pub fn scenario_from_value(v: &Value) -> Result<Scenario> {
    let obj = v.as_object().ok_or_else(|| parse_err("scenario must be a JSON object"))?;
    let dim = obj
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| parse_err("missing integer `dim`"))? as usize;
    let field: Field = obj
        .get("field")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_err("missing string `field`"))?
        .parse()?;
    let preps = obj
        .get("preparations")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("missing array `preparations`"))?
        .iter()
        .map(|p| match p.get("matrix") {
            Some(m) => Preparation::from_matrix(matrix_from(m)?),
            None => Ok(Preparation::from_pure(vector_from(p, field)?)),
        })
        .collect::<Result<Vec<_>>>()?;
    let effs = obj
        .get("effects")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("missing array `effects`"))?
        .iter()
        .map(|e| {
            if let Some(cols) = e.get("columns").and_then(Value::as_array) {
                let cols = cols.iter().map(|c| vector_from(c, field)).collect::<Result<Vec<_>>>()?;
                Effect::from_columns(dim, cols)
            } else if let Some(m) = e.get("matrix") {
                Effect::from_matrix(matrix_from(m)?)
            } else {
                Err(parse_err("effect needs `columns` or `matrix`"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(dim, field, preps, effs)
}

pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    scenario_from_value(&serde_json::from_str(text)?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    scenario_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_scenario(path: &Path, s: &Scenario) -> Result<()> {
    std::fs::write(path, scenario_to_json(s))?;
    Ok(())
}

/// Full matrix including the ones row; header `x1,...,x{k+1}`.
pub fn probability_matrix_to_csv(pm: &ProbabilityMatrix) -> String {
    let n = pm.k() + 1;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=n).map(|j| format!("x{j}"))).expect("in-memory write");
    for r in 0..n {
        w.write_record((0..n).map(|c| pm.get(r, c).to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn probability_matrix_from_csv(text: &str) -> Result<ProbabilityMatrix> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| parse_err(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    ProbabilityMatrix::from_rows(&rows)
}

/// One line per measured cell: `i,j,n_ij,n` with 0-based indices.
pub fn counts_to_csv(shots: &ShotData) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "n_ij", "n"]).expect("in-memory write");
    for i in 0..shots.counts.nrows() {
        for j in 0..shots.counts.ncols() {
            w.write_record([i.to_string(), j.to_string(), shots.counts[(i, j)].to_string(), shots.n.to_string()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[derive(serde::Deserialize)]
struct CountRow {
    i: usize,
    j: usize,
    n_ij: u64,
    n: u64,
}

/// Reads a counts table for `k` measurements; every cell must be present once.
pub fn counts_from_csv(text: &str, k: usize, seed: Option<u64>) -> Result<ShotData> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut counts = DMatrix::from_element(k, k + 1, u64::MAX);
    let mut n = None;
    for rec in rdr.deserialize::<CountRow>() {
        let row = rec.map_err(|e| parse_err(e.to_string()))?;
        if row.i >= k || row.j > k {
            return Err(Error::IndexOutOfRange(format!("count cell ({}, {}) for k = {k}", row.i, row.j)));
        }
        if *n.get_or_insert(row.n) != row.n {
            return Err(parse_err("all cells must share the same n"));
        }
        if counts[(row.i, row.j)] != u64::MAX {
            return Err(parse_err(format!("duplicate count cell ({}, {})", row.i, row.j)));
        }
        counts[(row.i, row.j)] = row.n_ij;
    }
    if counts.iter().any(|&c| c == u64::MAX) {
        return Err(parse_err("counts table is missing cells"));
    }
    ShotData::new(n.unwrap_or(0), counts, seed)
}
