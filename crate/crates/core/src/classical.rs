//! Classical register models and the {0,1} maximal-determinant problem.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scenario::ProbabilityMatrix;
use crate::state::NORM_TOL;

/// Stochastic preparation map `r` (d x (k+1)) and outcome map `q` (k x d).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModel {
    r: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl ClassicalModel {
    pub fn new(r: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let d = r.nrows();
        if d == 0 || q.ncols() != d {
            return Err(Error::Structural(format!(
                "transfer matrix has {d} register states but outcome matrix has {}",
                q.ncols()
            )));
        }
        if r.ncols() != q.nrows() + 1 {
            return Err(Error::Structural(format!(
                "{} preparations for {} measurements; exactly k + 1 are required",
                r.ncols(),
                q.nrows()
            )));
        }
        let in_unit = |v: &f64| (-NORM_TOL..=1.0 + NORM_TOL).contains(v);
        if !r.iter().all(in_unit) || !q.iter().all(in_unit) {
            return Err(Error::NumericIntegrity("classical model entry outside [0, 1]".into()));
        }
        for (j, col) in r.column_iter().enumerate() {
            let s: f64 = col.sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::NumericIntegrity(format!(
                    "transfer column {j} sums to {s}, not 1"
                )));
            }
        }
        Ok(Self { r, q })
    }

    /// Register size `d`.
    pub fn d(&self) -> usize {
        self.r.nrows()
    }

    pub fn k(&self) -> usize {
        self.q.nrows()
    }
}

/// `p = q r` with the always-yes row appended.
pub fn classical_probability_matrix(model: &ClassicalModel) -> Result<ProbabilityMatrix> {
    let p = &model.q * &model.r;
    ProbabilityMatrix::from_measured(&p.map(|v| v.clamp(0.0, 1.0)))
}

/// Largest determinant of a `(k+1) x (k+1)` matrix with entries in [0, 1]:
/// `(k+1)^((k+1)/2) / 2^k`.
pub fn hadamard_bound(k: usize) -> f64 {
    let n = (k + 1) as f64;
    n.powf(n / 2.0) / 2f64.powi(k as i32)
}

/// A `k x (k+1)` matrix of bits; the always-yes row is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryWitnessMatrix {
    pub k: usize,
    pub rows: Vec<Vec<u8>>,
}

impl BinaryWitnessMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::Structural("binary witness matrix needs k >= 1".into()));
        }
        if rows.iter().any(|r| r.len() != k + 1) {
            return Err(Error::Structural("binary witness rows must have k + 1 entries".into()));
        }
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err(Error::Structural("binary witness entries must be 0 or 1".into()));
        }
        Ok(Self { k, rows })
    }

    fn from_mask(k: usize, mask: u64) -> Self {
        let n = k + 1;
        let rows = (0..k).map(|r| (0..n).map(|c| ((mask >> (r * n + c)) & 1) as u8).collect()).collect();
        Self { k, rows }
    }

    /// Full `(k+1) x (k+1)` integer matrix including the ones row.
    pub fn full_matrix(&self) -> Vec<Vec<i64>> {
        let mut m: Vec<Vec<i64>> =
            self.rows.iter().map(|r| r.iter().map(|&b| b as i64).collect()).collect();
        m.push(vec![1; self.k + 1]);
        m
    }

    pub fn determinant(&self) -> i64 {
        bareiss_det(self.full_matrix())
    }

    pub fn to_probability_matrix(&self) -> ProbabilityMatrix {
        let n = self.k + 1;
        let m = DMatrix::from_fn(n, n, |r, c| if r < self.k { self.rows[r][c] as f64 } else { 1.0 });
        ProbabilityMatrix::new(m).expect("binary matrix is a valid probability matrix")
    }
}

/// Exact integer determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_det(mut m: Vec<Vec<i64>>) -> i64 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i64;
    let mut prev = 1i128;
    for p in 0..n - 1 {
        if m[p][p] == 0 {
            match (p + 1..n).find(|&r| m[r][p] != 0) {
                Some(r) => {
                    m.swap(p, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        let piv = m[p][p] as i128;
        for i in p + 1..n {
            for j in p + 1..n {
                let v = (m[i][j] as i128 * piv - m[i][p] as i128 * m[p][j] as i128) / prev;
                m[i][j] = v as i64;
            }
            m[i][p] = 0;
        }
        prev = piv;
    }
    sign * m[n - 1][n - 1]
}

fn det_of_mask(k: usize, mask: u64, buf: &mut Vec<Vec<i64>>) -> i64 {
    let n = k + 1;
    for r in 0..k {
        let row = (mask >> (r * n)) & ((1u64 << n) - 1);
        // a zero row or a row of ones (equal to the always-yes row) kills the determinant
        if row == 0 || row == (1u64 << n) - 1 {
            return 0;
        }
        for c in 0..n {
            buf[r][c] = ((row >> c) & 1) as i64;
        }
    }
    for c in 0..n {
        buf[k][c] = 1;
    }
    bareiss_det(buf.clone())
}

/// Exact maximum of |W_k| over all binary matrices, by enumeration.
pub fn exhaustive_binary_max(k: usize) -> Result<(i64, BinaryWitnessMatrix)> {
    if k == 0 || k > 4 {
        return Err(Error::Capability(format!(
            "exhaustive search supports 1 <= k <= 4 (got {k}); use binary annealing"
        )));
    }
    let bits = k * (k + 1);
    let total = 1u64 << bits;
    let chunk = (total / 64).max(1);
    let (best, mask) = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![vec![0i64; k + 1]; k + 1];
            let mut best = (0i64, u64::MAX);
            for mask in c * chunk..((c + 1) * chunk).min(total) {
                let d = det_of_mask(k, mask, &mut buf).abs();
                if d > best.0 {
                    best = (d, mask);
                }
            }
            best
        })
        .reduce(|| (0, u64::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok((best, BinaryWitnessMatrix::from_mask(k, mask)))
}

#[derive(Debug, Deserialize)]
struct Table2File {
    version: u32,
    matrices: Vec<Table2Entry>,
}

#[derive(Debug, Deserialize)]
struct Table2Entry {
    k: usize,
    value: i64,
    rows: Vec<Vec<u8>>,
}

const TABLE2_JSON: &str = include_str!("../data/table2.json");

/// Known classical maxima of |W_k| for k = 1..9.
pub const CLASSICAL_MAXIMA: [i64; 9] = [1, 1, 2, 3, 5, 9, 32, 56, 144];

/// The shipped extremal binary matrix for `k` and its expected |det|.
pub fn table2_matrix(k: usize) -> Result<(BinaryWitnessMatrix, i64)> {
    let file: Table2File = serde_json::from_str(TABLE2_JSON)?;
    if file.version != 1 {
        return Err(Error::Parse(format!("unsupported table version {}", file.version)));
    }
    let e = file
        .matrices
        .into_iter()
        .find(|e| e.k == k)
        .ok_or_else(|| Error::Capability(format!("no stored extremal matrix for k = {k}")))?;
    Ok((BinaryWitnessMatrix::new(e.rows)?, e.value))
}

/// `(|det|, expected)` for the stored extremal matrix.
pub fn verify_table2(k: usize) -> Result<(i64, i64)> {
    let (m, expected) = table2_matrix(k)?;
    Ok((m.determinant().abs(), expected))
}

/// Cooling schedule for the bit-flip search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySchedule {
    pub t0: f64,
    pub ratio: f64,
    pub stages: usize,
    pub sweeps_per_stage: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BinarySchedule {
    fn default() -> Self {
        Self { t0: 4.0, ratio: 0.85, stages: 60, sweeps_per_stage: 40, restarts: 20, seed: 0 }
    }
}

/// Metropolis search over single bit flips, maximizing |det|.
///
/// Heuristic counterpart of [`exhaustive_binary_max`] for larger `k`.
/// Temperatures are scaled by the Hadamard bound of `k` so the schedule
/// does not depend on the size of the determinants.
pub fn binary_anneal_max(k: usize, schedule: &BinarySchedule) -> Result<(i64, BinaryWitnessMatrix)> {
    if k == 0 || k > 12 {
        return Err(Error::Capability(format!("binary annealing supports 1 <= k <= 12 (got {k})")));
    }
    if !(schedule.ratio > 0.0 && schedule.ratio < 1.0) || schedule.restarts == 0 {
        return Err(Error::Structural("invalid binary schedule".into()));
    }
    let scale = hadamard_bound(k);
    let runs: Vec<(i64, Vec<Vec<i64>>)> = (0..schedule.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut g = rng::stream(schedule.seed, &[restart as u64]);
            let n = k + 1;
            let mut m: Vec<Vec<i64>> = (0..n)
                .map(|r| (0..n).map(|_| if r == k { 1 } else { g.random_range(0..2) }).collect())
                .collect();
            let mut cur = bareiss_det(m.clone()).abs();
            let mut best = (cur, m.clone());
            let mut t = schedule.t0 * scale;
            for _ in 0..schedule.stages {
                for _ in 0..schedule.sweeps_per_stage * k * n {
                    let (r, c) = (g.random_range(0..k), g.random_range(0..n));
                    m[r][c] ^= 1;
                    let cand = bareiss_det(m.clone()).abs();
                    let accept = cand >= cur || g.random::<f64>() < ((cand - cur) as f64 / t).exp();
                    if accept {
                        cur = cand;
                        if cur > best.0 {
                            best = (cur, m.clone());
                        }
                    } else {
                        m[r][c] ^= 1;
                    }
                }
                t *= schedule.ratio;
            }
            best
        })
        .collect();
    let (value, m) = runs
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one restart");
    let rows = m[..k].iter().map(|r| r.iter().map(|&v| v as u8).collect()).collect();
    Ok((value, BinaryWitnessMatrix::new(rows)?))
}
