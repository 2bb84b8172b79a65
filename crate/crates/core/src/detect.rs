//! Testing whether data are consistent with a `d`-level system.
//!
//! A clean `d`-level system at the critical `k` has `W_k = 0`. Leakage into
//! further levels shifts the probabilities by `dp`, and the witness picks it
//! up at first order through the adjugate of the clean matrix, or at second
//! order through its `(k-1)`-minors when one more measurement is used.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::scenario::{build_probability_matrix, ProbabilityMatrix, Scenario};
use crate::state::{Effect, Field, Preparation, StateVector, NORM_TOL};
use crate::witness::{adjugate, minimal_counts, witness};

/// A clean probability matrix together with a deviation `dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedScenario {
    base: ProbabilityMatrix,
    delta_p: DMatrix<f64>,
}

impl PerturbedScenario {
    pub fn new(base: ProbabilityMatrix, delta_p: DMatrix<f64>) -> Result<Self> {
        let n = base.k() + 1;
        if delta_p.shape() != (n, n) {
            return Err(Error::Structural(format!(
                "deviation is {}x{}, base matrix is {n}x{n}",
                delta_p.nrows(),
                delta_p.ncols()
            )));
        }
        if delta_p.row(n - 1).iter().any(|v| *v != 0.0) {
            return Err(Error::Structural("deviation of the always-yes row must be zero".into()));
        }
        for (idx, (p, dp)) in base.entries().iter().zip(delta_p.iter()).enumerate() {
            let v = p + dp;
            if !v.is_finite() || v < -NORM_TOL || v > 1.0 + NORM_TOL {
                return Err(Error::NumericIntegrity(format!(
                    "perturbed entry ({}, {}) = {v} outside [0, 1]",
                    idx % n,
                    idx / n
                )));
            }
        }
        Ok(Self { base, delta_p })
    }

    /// The deviation between a clean scenario and a physical perturbation of it.
    pub fn from_scenarios(clean: &Scenario, perturbed: &Scenario) -> Result<Self> {
        if clean.k() != perturbed.k() {
            return Err(Error::Structural("scenarios differ in k".into()));
        }
        let p0 = build_probability_matrix(clean)?;
        let p = build_probability_matrix(perturbed)?;
        let dp = p.entries() - p0.entries();
        Self::new(p0, dp)
    }

    pub fn base(&self) -> &ProbabilityMatrix {
        &self.base
    }

    pub fn delta_p(&self) -> &DMatrix<f64> {
        &self.delta_p
    }

    /// `p0 + dp` as a probability matrix.
    pub fn perturbed(&self) -> Result<ProbabilityMatrix> {
        let m = self.base.entries() + &self.delta_p;
        ProbabilityMatrix::new(m.map(|v| v.clamp(0.0, 1.0)))
    }

    /// `W(p0 + dp)` evaluated directly.
    pub fn exact_witness(&self) -> f64 {
        linalg::det(&(self.base.entries() + &self.delta_p))
    }
}

/// Same states in a larger space, padded with zeros.
pub fn embed_scenario(s: &Scenario, dim: usize) -> Result<Scenario> {
    if dim < s.dim() {
        return Err(Error::Structural(format!("cannot embed dimension {} into {dim}", s.dim())));
    }
    let pad = |m: &DMatrix<Complex64>| {
        let mut out = DMatrix::zeros(dim, dim);
        out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        out
    };
    let preps = s
        .preparations()
        .iter()
        .map(|p| match p.pure_state() {
            Some(v) => Ok(Preparation::from_pure(v.embed(dim)?)),
            None => Preparation::from_matrix(pad(p.matrix())),
        })
        .collect::<Result<Vec<_>>>()?;
    let effs = s
        .effects()
        .iter()
        .map(|e| match e.columns() {
            Some(cols) => Effect::from_columns(dim, cols.iter().map(|c| c.embed(dim)).collect::<Result<_>>()?),
            None => Effect::from_matrix(pad(e.matrix())),
        })
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(dim, s.field(), preps, effs)
}

/// Tilts `v` towards the direction `w` by amplitude `delta`:
/// `sqrt(1 - delta^2) v + delta w'` with `w'` the unit part of `w` orthogonal to `v`.
fn tilt(v: &StateVector, w: &StateVector, delta: f64) -> Result<StateVector> {
    if v.dim() != w.dim() {
        return Err(Error::Structural("leak direction has the wrong dimension".into()));
    }
    let ov = v.inner(w);
    let perp: Vec<Complex64> =
        w.amplitudes().iter().zip(v.amplitudes()).map(|(b, a)| b - a * ov).collect();
    let nrm = perp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm < crate::state::DEPENDENCE_TOL {
        return Err(Error::Degenerate("leak direction is parallel to the state".into()));
    }
    let c = (1.0 - delta * delta).sqrt();
    let amps: Vec<Complex64> =
        v.amplitudes().iter().zip(&perp).map(|(a, b)| a * c + b * (delta / nrm)).collect();
    let field = if amps.iter().all(|z| z.im == 0.0) { Field::Real } else { Field::Complex };
    StateVector::normalized(amps, field)
}

/// Which states of a clean pure-state scenario leak, and where to.
#[derive(Debug, Clone)]
pub struct Leakage {
    pub delta: f64,
    /// `(preparation index, direction)`.
    pub preparations: Vec<(usize, StateVector)>,
    /// `(effect index, direction)`; the first projector column is tilted.
    pub effects: Vec<(usize, StateVector)>,
}

/// Physically perturbed scenario: each listed pure state is rotated by
/// `delta` towards its direction, to first order `dX = |x'><x| + |x><x'|`.
///
/// Directions outside the original space or with imaginary parts model
/// extra levels or complex admixtures of a real system.
pub fn physical_perturbation(s: &Scenario, leak: &Leakage) -> Result<Scenario> {
    if !(0.0..1.0).contains(&leak.delta.abs()) {
        return Err(Error::Structural("leak amplitude must lie in (-1, 1)".into()));
    }
    let mut preps = s.preparations().to_vec();
    for (j, w) in &leak.preparations {
        let x = preps
            .get(*j)
            .ok_or_else(|| Error::IndexOutOfRange(format!("preparation {j}")))?
            .pure_state()
            .ok_or_else(|| Error::Capability("leakage needs pure preparations".into()))?;
        preps[*j] = Preparation::from_pure(tilt(x, w, leak.delta)?);
    }
    let mut effs = s.effects().to_vec();
    for (i, w) in &leak.effects {
        let cols = effs
            .get(*i)
            .ok_or_else(|| Error::IndexOutOfRange(format!("effect {i}")))?
            .columns()
            .ok_or_else(|| Error::Capability("leakage needs projector effects".into()))?
            .to_vec();
        if cols.is_empty() {
            return Err(Error::Capability("cannot tilt a zero effect".into()));
        }
        // keep the tilted column orthogonal to the rest of the projector
        let mut w = w.clone();
        for c in &cols[1..] {
            let ov = c.inner(&w);
            let amps = w.amplitudes().iter().zip(c.amplitudes()).map(|(b, a)| b - a * ov).collect();
            w = StateVector::normalized(amps, Field::Complex)?;
        }
        let mut new_cols = cols.clone();
        new_cols[0] = tilt(&cols[0], &w, leak.delta)?;
        effs[*i] = Effect::from_columns(s.dim(), new_cols)?;
    }
    let complex = preps.iter().any(|p| !p.is_real()) || effs.iter().any(|e| !e.is_real());
    let field = if complex { Field::Complex } else { s.field() };
    Scenario::new(s.dim(), field, preps, effs)
}

/// `Tr(dp Adj p0)`.
pub fn first_order_witness(ps: &PerturbedScenario) -> f64 {
    let adj = adjugate(&ps.base);
    (&ps.delta_p * adj).trace()
}

fn sign(i: usize, j: usize, i2: usize, j2: usize) -> f64 {
    if (i + j + i2 + j2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Second-order term: sum over `i < i'`, `j != j'` of
/// `sgn(j' - j) dp_ij dp_i'j' M (-1)^(i+j+i'+j')`, where `M` drops rows
/// `i, i'` and columns `j, j'` of `p0`.
pub fn second_order_witness(ps: &PerturbedScenario) -> f64 {
    let n = ps.base.k() + 1;
    let p = ps.base.entries();
    let dp = &ps.delta_p;
    let mut total = 0.0;
    for i in 0..n {
        for i2 in i + 1..n {
            for j in 0..n {
                if dp[(i, j)] == 0.0 {
                    continue;
                }
                for j2 in 0..n {
                    if j2 == j || dp[(i2, j2)] == 0.0 {
                        continue;
                    }
                    let sgn = if j2 > j { 1.0 } else { -1.0 };
                    let m = linalg::det_without(p, &[i, i2], &[j, j2]);
                    total += sgn * dp[(i, j)] * dp[(i2, j2)] * m * sign(i, j, i2, j2);
                }
            }
        }
    }
    total
}

fn check_shots(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Structural("number of repetitions must be positive".into()));
    }
    Ok(n as f64)
}

/// `sum_ij p_ij (1 - p_ij) Adj_ji^2 / N`.
pub fn null_variance(pm: &ProbabilityMatrix, n: u64) -> Result<f64> {
    let n = check_shots(n)?;
    let adj = adjugate(pm);
    let k = pm.k();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..=k {
            let p = pm.get(i, j);
            s += p * (1.0 - p) * adj[(j, i)].powi(2);
        }
    }
    Ok(s / n)
}

/// `sum p_ij p_i'j' (1 - p_ij)(1 - p_i'j') M^2 / N^2` over `i < i'`, `j != j'`.
pub fn null_variance_second(pm: &ProbabilityMatrix, n: u64) -> Result<f64> {
    let n = check_shots(n)?;
    let k = pm.k();
    let q = |i: usize, j: usize| {
        let p = pm.get(i, j);
        p * (1.0 - p)
    };
    let mut s = 0.0;
    for i in 0..k {
        for i2 in i + 1..k {
            for j in 0..=k {
                let a = q(i, j);
                if a == 0.0 {
                    continue;
                }
                for j2 in 0..=k {
                    if j2 == j {
                        continue;
                    }
                    let b = q(i2, j2);
                    if b == 0.0 {
                        continue;
                    }
                    let m = linalg::det_without(pm.entries(), &[i, i2], &[j, j2]);
                    s += a * b * m * m;
                }
            }
        }
    }
    Ok(s / (n * n))
}

/// Positive-outcome counts `N_ij` out of `N` repetitions per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotData {
    pub n: u64,
    /// `k x (k+1)`, rows are measurements.
    pub counts: DMatrix<u64>,
    pub seed: Option<u64>,
}

impl ShotData {
    pub fn new(n: u64, counts: DMatrix<u64>, seed: Option<u64>) -> Result<Self> {
        check_shots(n)?;
        if counts.ncols() != counts.nrows() + 1 || counts.nrows() == 0 {
            return Err(Error::Structural(format!(
                "counts must be k x (k+1), got {}x{}",
                counts.nrows(),
                counts.ncols()
            )));
        }
        if let Some(c) = counts.iter().find(|&&c| c > n) {
            return Err(Error::Structural(format!("count {c} exceeds {n} repetitions")));
        }
        Ok(Self { n, counts, seed })
    }

    /// From `k` rows of `k+1` counts.
    pub fn from_rows(n: u64, rows: &[Vec<u64>], seed: Option<u64>) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k + 1) {
            return Err(Error::Structural(format!("counts must be {k} rows of {} cells", k + 1)));
        }
        let flat: Vec<u64> = rows.iter().flatten().copied().collect();
        Self::new(n, DMatrix::from_row_slice(k, k + 1, &flat), seed)
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn k(&self) -> usize {
        self.counts.nrows()
    }

    /// `N_ij / N` with the always-yes row appended.
    pub fn estimate(&self) -> ProbabilityMatrix {
        let nf = self.n as f64;
        ProbabilityMatrix::from_measured(&self.counts.map(|c| c as f64 / nf))
            .expect("frequencies form a probability matrix")
    }
}

/// Binomial shot counts for one experiment run.
///
/// Cell `(i, j)` draws from its own stream derived from `(seed, trial, i, j)`,
/// so results do not depend on evaluation order or thread count.
pub fn simulate_shots_trial(pm: &ProbabilityMatrix, n: u64, seed: u64, trial: u64) -> Result<ShotData> {
    check_shots(n)?;
    let k = pm.k();
    let mut counts = DMatrix::zeros(k, k + 1);
    for i in 0..k {
        for j in 0..=k {
            let p = pm.get(i, j).clamp(0.0, 1.0);
            let dist = Binomial::new(n, p).map_err(|e| Error::NumericIntegrity(e.to_string()))?;
            let mut g = rng::stream(seed, &[trial, i as u64, j as u64]);
            counts[(i, j)] = dist.sample(&mut g);
        }
    }
    ShotData::new(n, counts, Some(seed))
}

pub fn simulate_shots(pm: &ProbabilityMatrix, n: u64, seed: u64) -> Result<ShotData> {
    simulate_shots_trial(pm, n, seed, 0)
}

/// Witness estimates `det(N_ij / N)` for `trials` independent runs.
pub fn simulate_witness_trials(pm: &ProbabilityMatrix, n: u64, trials: u64, seed: u64) -> Result<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|t| simulate_shots_trial(pm, n, seed, t).map(|s| witness(&s.estimate())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// The data do not contradict the assumed dimension. This never
    /// certifies it: a vanishing witness can be accidental.
    Consistent,
    ExcessDimension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub witness_hat: f64,
    pub variance: f64,
    /// Threshold in standard deviations.
    pub z: f64,
    /// `|witness_hat| / sqrt(variance)`.
    pub z_score: f64,
    pub verdict: Verdict,
}

pub const DEFAULT_Z: f64 = 5.0;

/// Flags excess dimension when `w_hat^2 > z^2 variance`.
pub fn decide(w_hat: f64, variance: f64, z: f64) -> Result<DetectionReport> {
    if !w_hat.is_finite() || !variance.is_finite() || variance < 0.0 {
        return Err(Error::NumericIntegrity(format!("cannot decide on w = {w_hat}, var = {variance}")));
    }
    if !(z > 0.0) {
        return Err(Error::Structural("threshold z must be positive".into()));
    }
    let verdict = if w_hat * w_hat > z * z * variance {
        Verdict::ExcessDimension
    } else {
        Verdict::Consistent
    };
    let z_score = if variance > 0.0 {
        w_hat.abs() / variance.sqrt()
    } else if w_hat == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(DetectionReport { witness_hat: w_hat, variance, z, z_score, verdict })
}

/// Which expansion governs the null variance for a clean `d`-level scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Second,
}

/// First order at the critical `k`, second order one measurement above.
pub fn variance_order(d: usize, field: Field, k: usize) -> Result<Order> {
    let (kmin, _) = minimal_counts(d, field.into());
    if k == kmin {
        Ok(Order::First)
    } else if k == kmin + 1 {
        Ok(Order::Second)
    } else {
        Err(Error::Capability(format!(
            "detection needs k = {kmin} or {} for d = {d} ({field}), got {k}",
            kmin + 1
        )))
    }
}

/// Tests shot data against the null model given by a clean scenario.
pub fn detect(clean: &Scenario, shots: &ShotData, z: f64) -> Result<DetectionReport> {
    if shots.k() != clean.k() {
        return Err(Error::Structural(format!(
            "counts are for k = {}, scenario has k = {}",
            shots.k(),
            clean.k()
        )));
    }
    let p0 = build_probability_matrix(clean)?;
    let variance = match variance_order(clean.dim(), clean.field(), clean.k())? {
        Order::First => null_variance(&p0, shots.n)?,
        Order::Second => null_variance_second(&p0, shots.n)?,
    };
    decide(witness(&shots.estimate()), variance, z)
}

/// Uniformly random unit vector, used by tests and sampling helpers.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, field: Field) -> StateVector {
    loop {
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re = rand_distr::StandardNormal.sample(rng);
                let im = if field == Field::Complex { rand_distr::StandardNormal.sample(rng) } else { 0.0 };
                Complex64::new(re, im)
            })
            .collect();
        if let Ok(v) = StateVector::normalized(amps, field) {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: &[&[f64]]) -> ProbabilityMatrix {
        ProbabilityMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn zero_deviation_gives_zero() {
        let p = pm(&[&[0.2, 0.5, 0.9], &[0.4, 0.1, 0.3], &[1.0, 1.0, 1.0]]);
        let ps = PerturbedScenario::new(p, DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(first_order_witness(&ps), 0.0);
        assert_eq!(second_order_witness(&ps), 0.0);
    }

    #[test]
    fn deviation_validation() {
        let p = pm(&[&[0.2, 0.5], &[1.0, 1.0]]);
        let mut dp = DMatrix::zeros(2, 2);
        dp[(1, 0)] = 0.1;
        assert!(PerturbedScenario::new(p.clone(), dp).is_err());
        let mut dp = DMatrix::zeros(2, 2);
        dp[(0, 1)] = 0.6;
        assert!(PerturbedScenario::new(p, dp).is_err());
    }

    #[test]
    fn second_order_is_exact_for_duplicated_columns() {
        // p0 has two equal column pairs, so det and its first-order term vanish
        // and the determinant of p0 + dp is quadratic in dp when only two rows move
        let p = pm(&[
            &[0.3, 0.3, 0.6, 0.6],
            &[0.2, 0.2, 0.7, 0.7],
            &[0.5, 0.5, 0.1, 0.1],
            &[1.0, 1.0, 1.0, 1.0],
        ]);
        let mut dp = DMatrix::zeros(4, 4);
        dp[(0, 1)] = 0.01;
        dp[(2, 3)] = -0.02;
        dp[(2, 0)] = 0.015;
        let ps = PerturbedScenario::new(p, dp).unwrap();
        assert!(first_order_witness(&ps).abs() < 1e-15);
        assert!((second_order_witness(&ps) - ps.exact_witness()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_matrices_have_zero_variance() {
        let p = pm(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0], &[1.0, 1.0, 1.0]]);
        assert_eq!(null_variance(&p, 100).unwrap(), 0.0);
        assert_eq!(null_variance_second(&p, 100).unwrap(), 0.0);
    }

    #[test]
    fn second_variance_scales_as_inverse_square() {
        let p = pm(&[&[0.2, 0.5, 0.9], &[0.4, 0.1, 0.3], &[1.0, 1.0, 1.0]]);
        let a = null_variance_second(&p, 1000).unwrap();
        let b = null_variance_second(&p, 2000).unwrap();
        assert!((a / 4.0 - b).abs() < 1e-15 * a);
    }

    #[test]
    fn shots_at_certain_outcomes() {
        let p = pm(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let s = simulate_shots(&p, 1000, 3).unwrap();
        assert_eq!(s.counts[(0, 0)], 1000);
        assert_eq!(s.counts[(0, 1)], 0);
        assert_eq!(simulate_shots(&p, 1000, 3).unwrap(), s);
    }

    #[test]
    fn binomial_concentration() {
        let p = pm(&[&[0.5, 0.5], &[1.0, 1.0]]);
        let s = simulate_shots(&p, 1_000_000, 11).unwrap();
        for j in 0..2 {
            assert!((s.counts[(0, j)] as f64 / 1e6 - 0.5).abs() < 0.002);
        }
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(0.0, 1e-4, DEFAULT_Z).unwrap().verdict, Verdict::Consistent);
        let r = decide(0.06, 1e-4, DEFAULT_Z).unwrap();
        assert_eq!(r.verdict, Verdict::ExcessDimension);
        assert!((r.z_score - 6.0).abs() < 1e-12);
        assert_eq!(decide(0.04, 1e-4, DEFAULT_Z).unwrap().verdict, Verdict::Consistent);
        assert!(decide(0.0, -1.0, DEFAULT_Z).is_err());
    }

    #[test]
    fn order_follows_counting_rule() {
        assert_eq!(variance_order(2, Field::Complex, 4).unwrap(), Order::First);
        assert_eq!(variance_order(2, Field::Complex, 5).unwrap(), Order::Second);
        assert_eq!(variance_order(2, Field::Real, 3).unwrap(), Order::First);
        assert!(variance_order(2, Field::Complex, 3).is_err());
    }
}
