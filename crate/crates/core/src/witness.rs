//! The determinant witness and the matrix quantities derived from it.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scenario::{build_probability_matrix, ProbabilityMatrix, Scenario};
use crate::state::{bloch_effect, bloch_state, Field};

/// `W_k = det p`.
///
/// Columns are eliminated in a canonical (lexicographic) order and the sign
/// of the sorting permutation applied afterwards, so reordering the
/// preparations changes the result by exactly that sign.
pub fn witness(pm: &ProbabilityMatrix) -> f64 {
    let m = pm.entries();
    let n = m.ncols();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        m.column(a)
            .iter()
            .zip(m.column(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sorted = DMatrix::from_fn(n, n, |r, c| m[(r, order[c])]);
    let w = linalg::det(&sorted) * permutation_sign(&order);
    debug_assert!(w.abs() <= crate::classical::hadamard_bound(pm.k()) + 1e-9);
    w
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1.0;
    for start in 0..p.len() {
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len > 0 && len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Subtracts the last column from the others and drops the last row and
/// column. The determinant is unchanged.
pub fn reduce_columns(pm: &ProbabilityMatrix) -> DMatrix<f64> {
    let k = pm.k();
    DMatrix::from_fn(k, k, |i, j| pm.get(i, j) - pm.get(i, k))
}

/// Adjugate of `p`, so that `Adj(p) p = det(p) I`.
pub fn adjugate(pm: &ProbabilityMatrix) -> DMatrix<f64> {
    linalg::adjugate(pm.entries())
}

/// Determinant of `p` with two rows and two columns removed (0-based).
pub fn minor(pm: &ProbabilityMatrix, rows: (usize, usize), cols: (usize, usize)) -> Result<f64> {
    let n = pm.k() + 1;
    for idx in [rows.0, rows.1, cols.0, cols.1] {
        if idx >= n {
            return Err(Error::IndexOutOfRange(format!("index {idx} for a {n}x{n} matrix")));
        }
    }
    if rows.0 == rows.1 || cols.0 == cols.1 {
        return Err(Error::IndexOutOfRange("minor needs two distinct rows and columns".into()));
    }
    Ok(linalg::det_without(pm.entries(), &[rows.0, rows.1], &[cols.0, cols.1]))
}

/// Which kind of system a witness is meant to bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Classical,
    Real,
    Complex,
}

impl From<Field> for Model {
    fn from(f: Field) -> Self {
        match f {
            Field::Real => Model::Real,
            Field::Complex => Model::Complex,
        }
    }
}

/// Smallest `(k, m)` for which the witness vanishes identically on
/// `d`-dimensional systems of the given model.
pub fn minimal_counts(d: usize, model: Model) -> (usize, usize) {
    let k = match model {
        Model::Classical => d,
        Model::Real => d * (d + 1) / 2,
        Model::Complex => d * d,
    };
    (k, k + 1)
}

/// A qubit scenario given by Bloch vectors of pure preparations and
/// rank-one effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochScenario {
    pub preparations: Vec<[f64; 3]>,
    pub effects: Vec<[f64; 3]>,
}

impl BlochScenario {
    pub fn new(preparations: Vec<[f64; 3]>, effects: Vec<[f64; 3]>) -> Self {
        Self { preparations, effects }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let preps = self.preparations.iter().map(|&v| bloch_state(v)).collect::<Result<Vec<_>>>()?;
        let effs = self.effects.iter().map(|&v| bloch_effect(v)).collect::<Result<Vec<_>>>()?;
        let real = preps.iter().all(|p| p.is_real()) && effs.iter().all(|e| e.is_real());
        let field = if real { Field::Real } else { Field::Complex };
        Scenario::new(2, field, preps, effs)
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn triple(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    dot(a, cross(b, c))
}

/// Closed forms of `W_2` and `W_3` for a qubit in Bloch notation.
pub fn qubit_witness_closed_form(s: &BlochScenario) -> Result<f64> {
    let k = s.effects.len();
    if s.preparations.len() != k + 1 {
        return Err(Error::Structural("Bloch scenario needs k + 1 preparations".into()));
    }
    let x = &s.preparations;
    let y = &s.effects;
    match k {
        2 => Ok(dot(cross(sub(x[0], x[2]), sub(x[1], x[2])), cross(y[0], y[1])) / 4.0),
        3 => Ok(triple(sub(x[0], x[3]), sub(x[1], x[3]), sub(x[2], x[3]))
            * triple(y[0], y[1], y[2])
            / 8.0),
        _ => Err(Error::Capability(format!("closed form exists only for k = 2, 3 (got {k})"))),
    }
}

/// Witness value together with the matrix it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub witness: f64,
    pub probability_matrix: ProbabilityMatrix,
    pub scenario_digest: String,
    pub metadata: BTreeMap<String, String>,
}

pub fn evaluate(s: &Scenario) -> Result<WitnessReport> {
    let pm = build_probability_matrix(s)?;
    let w = witness(&pm);
    if !w.is_finite() {
        return Err(Error::NumericIntegrity("witness is not finite".into()));
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("dim".to_string(), s.dim().to_string());
    metadata.insert("field".to_string(), s.field().to_string());
    metadata.insert("k".to_string(), s.k().to_string());
    Ok(WitnessReport {
        witness: w,
        probability_matrix: pm,
        scenario_digest: crate::io::scenario_digest(s),
        metadata,
    })
}
