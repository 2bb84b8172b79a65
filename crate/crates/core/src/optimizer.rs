//! Simulated annealing of |W_k| over pure states and projective effects.
//!
//! Scenarios are encoded by angles. Preparations follow a gauge-fixed
//! staircase: the first is `e1`, the second is real in `span{e1, e2}`, the
//! third adds one phase, and so on until every further preparation is a
//! general ray. Each effect is a projector whose free columns are general
//! rays orthonormalized by Gram-Schmidt, optionally completed by fixed
//! computational basis vectors.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lu_det_in_place;
use crate::rng;
use crate::scenario::Scenario;
use crate::state::{Effect, Field, Preparation, StateVector, DEPENDENCE_TOL};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Where a block of consecutive angles goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Prep(usize),
    Effect(usize),
}

/// One ray: amplitudes on `support`, hyperspherical moduli from
/// `support.len() - 1` angles, then phases on `phased` positions.
#[derive(Debug, Clone, PartialEq)]
struct RaySpec {
    support: Vec<usize>,
    phased: Vec<usize>,
    start: usize,
}

impl RaySpec {
    fn len(&self) -> usize {
        self.support.len().saturating_sub(1) + self.phased.len()
    }

    fn write(&self, angles: &[f64], out: &mut [C]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        let m = self.support.len();
        let a = &angles[self.start..self.start + self.len()];
        let mut rest = 1.0;
        for (pos, &idx) in self.support.iter().enumerate() {
            let modulus = if pos + 1 < m {
                let v = rest * a[pos].cos();
                rest *= a[pos].sin();
                v
            } else {
                rest
            };
            out[idx] = C::new(modulus, 0.0);
        }
        for (t, &pos) in self.phased.iter().enumerate() {
            let ph = a[m - 1 + t];
            out[self.support[pos]] *= C::new(ph.cos(), ph.sin());
        }
    }
}

fn general_ray(support: Vec<usize>, field: Field, start: usize) -> RaySpec {
    let phased = match field {
        Field::Real => Vec::new(),
        Field::Complex => (1..support.len()).collect(),
    };
    RaySpec { support, phased, start }
}

/// Angle encoding of a pure-state scenario with projective effects.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleParametrization {
    dim: usize,
    field: Field,
    k: usize,
    ranks: Vec<usize>,
    fixed_blocks: Vec<Vec<usize>>,
    angles: Vec<f64>,
    preps: Vec<RaySpec>,
    effects: Vec<Vec<RaySpec>>,
    owners: Vec<Owner>,
}

impl AngleParametrization {
    /// `ranks[i]` free projector columns for effect `i`, plus the basis
    /// vectors listed in `fixed_blocks[i]` (0-based). All angles start at 0.
    pub fn new(
        dim: usize,
        field: Field,
        k: usize,
        ranks: Vec<usize>,
        fixed_blocks: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if dim == 0 || k == 0 {
            return Err(Error::Structural("dimension and k must be positive".into()));
        }
        if ranks.len() != k || fixed_blocks.len() != k {
            return Err(Error::Structural(format!(
                "rank profile has {} entries and fixed blocks {}, expected k = {k}",
                ranks.len(),
                fixed_blocks.len()
            )));
        }
        for (i, (&t, fixed)) in ranks.iter().zip(&fixed_blocks).enumerate() {
            let mut f = fixed.clone();
            f.sort_unstable();
            f.dedup();
            if f.len() != fixed.len() || f.iter().any(|&b| b >= dim) {
                return Err(Error::Structural(format!("effect {i}: invalid fixed block {fixed:?}")));
            }
            if t + f.len() == 0 || t + f.len() > dim {
                return Err(Error::Structural(format!(
                    "effect {i}: rank {} does not fit dimension {dim}",
                    t + f.len()
                )));
            }
        }
        let mut start = 0;
        let mut owners = Vec::new();
        let mut preps = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let spec = if j < dim {
                let n = j + 1;
                let phased = match field {
                    Field::Real => Vec::new(),
                    Field::Complex => (1..n.saturating_sub(1)).collect(),
                };
                RaySpec { support: (0..n).collect(), phased, start }
            } else {
                general_ray((0..dim).collect(), field, start)
            };
            start += spec.len();
            owners.extend(std::iter::repeat_n(Owner::Prep(j), spec.len()));
            preps.push(spec);
        }
        let mut effects = Vec::with_capacity(k);
        for (i, (&t, fixed)) in ranks.iter().zip(&fixed_blocks).enumerate() {
            let support: Vec<usize> = (0..dim).filter(|b| !fixed.contains(b)).collect();
            let mut rays = Vec::with_capacity(t);
            for _ in 0..t {
                let spec = general_ray(support.clone(), field, start);
                start += spec.len();
                owners.extend(std::iter::repeat_n(Owner::Effect(i), spec.len()));
                rays.push(spec);
            }
            effects.push(rays);
        }
        Ok(Self { dim, field, k, ranks, fixed_blocks, angles: vec![0.0; start], preps, effects, owners })
    }

    /// Every effect with `rank` free columns and no fixed block.
    pub fn uniform(dim: usize, field: Field, k: usize, rank: usize) -> Result<Self> {
        Self::new(dim, field, k, vec![rank; k], vec![Vec::new(); k])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn fixed_blocks(&self) -> &[Vec<usize>] {
        &self.fixed_blocks
    }

    pub fn angle_count(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn set_angles(&mut self, angles: Vec<f64>) -> Result<()> {
        if angles.len() != self.angles.len() {
            return Err(Error::Structural(format!(
                "{} angles given, parametrization has {}",
                angles.len(),
                self.angles.len()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::NumericIntegrity("non-finite angle".into()));
        }
        self.angles = angles.into_iter().map(|a| a.rem_euclid(TAU)).collect();
        Ok(())
    }

    pub fn with_angles(mut self, angles: Vec<f64>) -> Result<Self> {
        self.set_angles(angles)?;
        Ok(self)
    }

    fn prep_vector(&self, j: usize, angles: &[f64], out: &mut [C]) {
        self.preps[j].write(angles, out);
    }

    fn effect_columns(&self, i: usize, angles: &[f64]) -> Vec<Vec<C>> {
        let support: Vec<usize> = (0..self.dim).filter(|b| !self.fixed_blocks[i].contains(b)).collect();
        let raw: Vec<Vec<C>> = self.effects[i]
            .iter()
            .map(|r| {
                let mut v = vec![ZERO; self.dim];
                r.write(angles, &mut v);
                v
            })
            .collect();
        let mut cols = orthonormalize(&raw, &support, self.dim);
        for &b in &self.fixed_blocks[i] {
            let mut e = vec![ZERO; self.dim];
            e[b] = C::new(1.0, 0.0);
            cols.push(e);
        }
        cols
    }
}

/// Modified Gram-Schmidt; a nearly dependent vector is replaced by the next
/// basis vector of `support` that is independent of what is already kept.
fn orthonormalize(vs: &[Vec<C>], support: &[usize], dim: usize) -> Vec<Vec<C>> {
    let mut out: Vec<Vec<C>> = Vec::with_capacity(vs.len());
    let mut spare = support.iter();
    for v in vs {
        let mut cand = Some(v.clone());
        loop {
            let Some(mut w) = cand.take() else { break };
            for u in &out {
                let c: C = u.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
            let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n > DEPENDENCE_TOL {
                w.iter_mut().for_each(|z| *z /= n);
                out.push(w);
                break;
            }
            match spare.next() {
                Some(&b) => {
                    let mut e = vec![ZERO; dim];
                    e[b] = C::new(1.0, 0.0);
                    cand = Some(e);
                }
                None => break,
            }
        }
    }
    out
}

fn overlap_prob(x: &[C], cols: &[Vec<C>]) -> f64 {
    cols.iter()
        .map(|c| c.iter().zip(x).map(|(a, b)| a.conj() * b).sum::<C>().norm_sqr())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Raw vectors plus the probability matrix, updated one object at a time.
#[derive(Debug, Clone)]
struct Engine {
    n: usize,
    dim: usize,
    preps: Vec<Vec<C>>,
    effects: Vec<Vec<Vec<C>>>,
    /// Row-major `(k+1) x (k+1)`.
    p: Vec<f64>,
    buf: Vec<f64>,
}

impl Engine {
    fn new(dim: usize, preps: Vec<Vec<C>>, effects: Vec<Vec<Vec<C>>>) -> Self {
        let n = preps.len();
        let mut e = Self { n, dim, preps, effects, p: vec![1.0; n * n], buf: vec![0.0; n * n] };
        for i in 0..n - 1 {
            e.refresh_row(i);
        }
        e
    }

    fn from_params(par: &AngleParametrization) -> Self {
        let preps = (0..=par.k)
            .map(|j| {
                let mut v = vec![ZERO; par.dim];
                par.prep_vector(j, &par.angles, &mut v);
                v
            })
            .collect();
        let effects = (0..par.k).map(|i| par.effect_columns(i, &par.angles)).collect();
        Self::new(par.dim, preps, effects)
    }

    fn refresh_row(&mut self, i: usize) {
        for j in 0..self.n {
            self.p[i * self.n + j] = overlap_prob(&self.preps[j], &self.effects[i]);
        }
    }

    fn refresh_col(&mut self, j: usize) {
        for i in 0..self.n - 1 {
            self.p[i * self.n + j] = overlap_prob(&self.preps[j], &self.effects[i]);
        }
    }

    fn det(&mut self) -> f64 {
        self.buf.copy_from_slice(&self.p);
        lu_det_in_place(&mut self.buf, self.n)
    }

    fn row(&self, i: usize) -> Vec<f64> {
        self.p[i * self.n..(i + 1) * self.n].to_vec()
    }

    fn col(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.p[i * self.n + j]).collect()
    }

    fn set_row(&mut self, i: usize, r: &[f64]) {
        self.p[i * self.n..(i + 1) * self.n].copy_from_slice(r);
    }

    fn set_col(&mut self, j: usize, c: &[f64]) {
        for (i, v) in c.iter().enumerate() {
            self.p[i * self.n + j] = *v;
        }
    }

    fn scenario(&self, field: Field) -> Result<Scenario> {
        let fix = |v: &[C]| -> Result<StateVector> {
            match field {
                Field::Real => StateVector::normalized(v.iter().map(|z| C::new(z.re, 0.0)).collect(), Field::Real),
                Field::Complex => StateVector::normalized(v.to_vec(), Field::Complex),
            }
        };
        let preps = self.preps.iter().map(|v| fix(v).map(Preparation::from_pure)).collect::<Result<Vec<_>>>()?;
        let effs = self
            .effects
            .iter()
            .map(|cols| Effect::from_columns(self.dim, cols.iter().map(|c| fix(c)).collect::<Result<_>>()?))
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(self.dim, field, preps, effs)
    }
}

/// The scenario encoded by the current angles.
pub fn decode(params: &AngleParametrization) -> Result<Scenario> {
    Engine::from_params(params).scenario(params.field)
}

/// |W_k| of the decoded scenario without building validated objects.
pub fn objective(params: &AngleParametrization) -> f64 {
    Engine::from_params(params).det().abs()
}

/// Cooling schedule: stage `s` runs at `T = t0 ratio^s` with proposal
/// half-width `pi ratio^s`, so the width shrinks in step with `T`.
///
/// The default `t0 = 0.01` sits below typical |W_k| gains of a move while
/// the proposal window is still wide; at `t0 = 1` the chain is a random
/// walk until the window is too narrow to climb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub ratio: f64,
    pub precision: f64,
    pub max_stages: usize,
    pub sweeps_per_stage: usize,
    pub seed: u64,
}

impl AnnealSchedule {
    /// Smallest `s` with `t0 ratio^s < precision`.
    pub fn derived_max_stages(t0: f64, ratio: f64, precision: f64) -> usize {
        let mut s = 0;
        let mut t = t0;
        while t >= precision && s < 10_000 {
            t *= ratio;
            s += 1;
        }
        s
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Structural(format!("cooling ratio {} not in (0, 1)", self.ratio)));
        }
        if !(self.precision > 0.0) || !(self.t0 > 0.0) {
            return Err(Error::Structural("t0 and precision must be positive".into()));
        }
        if self.sweeps_per_stage == 0 {
            return Err(Error::Structural("sweeps_per_stage must be positive".into()));
        }
        Ok(())
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        let (t0, ratio, precision) = (0.01, 0.25, 1e-9);
        Self {
            t0,
            ratio,
            precision,
            max_stages: Self::derived_max_stages(t0, ratio, precision),
            sweeps_per_stage: 200,
            seed: 0,
        }
    }
}

/// Outcome of one annealing run, optionally polished by [`refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub best_angles: Vec<f64>,
    pub best_scenario: Scenario,
    /// Best value seen by the end of each stage.
    pub trace: Vec<f64>,
    /// Objective evaluations spent on proposals.
    pub evaluations: u64,
    pub seed: u64,
    /// |W_k| after refinement, when it ran.
    pub refined_value: Option<f64>,
}

impl OptimizationResult {
    /// The larger of the annealed and refined values.
    pub fn value(&self) -> f64 {
        self.refined_value.map_or(self.best_value, |r| r.max(self.best_value))
    }
}

fn owner_span(par: &AngleParametrization, a: usize) -> Owner {
    par.owners[a]
}

/// One sequential annealing run from the angles in `params`.
pub fn anneal(params: &AngleParametrization, schedule: &AnnealSchedule) -> Result<OptimizationResult> {
    schedule.validate()?;
    let mut g: ChaCha8Rng = rng::stream(schedule.seed, &[]);
    let mut par = params.clone();
    let na = par.angle_count();
    let mut eng = Engine::from_params(&par);
    let mut cur = eng.det().abs();
    if !cur.is_finite() {
        return Err(Error::NumericIntegrity("objective is not finite".into()));
    }
    let mut best = (cur, par.angles.clone());
    let mut trace = Vec::new();
    let mut evaluations = 0u64;
    let mut scratch = vec![ZERO; par.dim];
    let mut t = schedule.t0;
    let mut width = PI;
    for _stage in 0..schedule.max_stages {
        if width < schedule.precision {
            break;
        }
        if na > 0 {
            for _ in 0..schedule.sweeps_per_stage {
                for a in 0..na {
                    let old_angle = par.angles[a];
                    par.angles[a] = (old_angle + g.random_range(-width..=width)).rem_euclid(TAU);
                    let owner = owner_span(&par, a);
                    let saved = match owner {
                        Owner::Prep(j) => {
                            let col = eng.col(j);
                            par.prep_vector(j, &par.angles, &mut scratch);
                            let old = std::mem::replace(&mut eng.preps[j], scratch.clone());
                            eng.refresh_col(j);
                            (col, Some(old), None)
                        }
                        Owner::Effect(i) => {
                            let row = eng.row(i);
                            let cols = par.effect_columns(i, &par.angles);
                            let old = std::mem::replace(&mut eng.effects[i], cols);
                            eng.refresh_row(i);
                            (row, None, Some(old))
                        }
                    };
                    let cand = eng.det().abs();
                    evaluations += 1;
                    if !cand.is_finite() {
                        return Err(Error::NumericIntegrity("objective is not finite".into()));
                    }
                    let accept = cand >= cur || g.random::<f64>() < ((cand - cur) / t).exp();
                    if accept {
                        cur = cand;
                        if cur > best.0 {
                            best = (cur, par.angles.clone());
                        }
                    } else {
                        par.angles[a] = old_angle;
                        match (owner, saved) {
                            (Owner::Prep(j), (col, Some(old), _)) => {
                                eng.preps[j] = old;
                                eng.set_col(j, &col);
                            }
                            (Owner::Effect(i), (row, _, Some(old))) => {
                                eng.effects[i] = old;
                                eng.set_row(i, &row);
                            }
                            _ => unreachable!("saved state matches its owner"),
                        }
                    }
                }
            }
        }
        trace.push(best.0);
        t *= schedule.ratio;
        width *= schedule.ratio;
    }
    let best_params = params.clone().with_angles(best.1.clone())?;
    Ok(OptimizationResult {
        best_value: best.0,
        best_angles: best.1,
        best_scenario: decode(&best_params)?,
        trace,
        evaluations,
        seed: schedule.seed,
        refined_value: None,
    })
}

/// Compass-search settings for [`refine`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub step0: f64,
    pub tol: f64,
    pub max_evaluations: u64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { step0: 1e-2, tol: 1e-10, max_evaluations: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    Prep { j: usize, c: usize, imag: bool },
    Effect { i: usize, col: usize, c: usize, imag: bool },
}

fn normalize(v: &mut [C]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
}

/// Coordinate-wise finite-difference ascent of |W_k| (compass search).
///
/// Each pass tries `+h` and `-h` on the real (and, for complex scenarios,
/// imaginary) part of every amplitude, renormalizing the touched state or
/// re-orthonormalizing the touched effect, and keeps improvements. The step
/// halves after a pass without improvement; the search stops below `tol`.
pub fn refine(s: &Scenario, opts: &RefineOptions) -> Result<(Scenario, f64)> {
    if !s.is_vector_form() {
        return Err(Error::Capability("refine needs pure preparations and projector effects".into()));
    }
    let dim = s.dim();
    let field = s.field();
    let preps: Vec<Vec<C>> =
        s.preparations().iter().map(|p| p.pure_state().expect("vector form").amplitudes().to_vec()).collect();
    let effects: Vec<Vec<Vec<C>>> = s
        .effects()
        .iter()
        .map(|e| e.columns().expect("vector form").iter().map(|c| c.amplitudes().to_vec()).collect())
        .collect();
    let mut eng = Engine::new(dim, preps, effects);
    let mut cur = eng.det().abs();
    let mut coords = Vec::new();
    let parts: &[bool] = if field == Field::Real { &[false] } else { &[false, true] };
    for j in 0..eng.preps.len() {
        for c in 0..dim {
            for &imag in parts {
                coords.push(Coord::Prep { j, c, imag });
            }
        }
    }
    for (i, cols) in eng.effects.iter().enumerate() {
        for col in 0..cols.len() {
            for c in 0..dim {
                for &imag in parts {
                    coords.push(Coord::Effect { i, col, c, imag });
                }
            }
        }
    }
    let support: Vec<usize> = (0..dim).collect();
    let mut h = opts.step0;
    let mut evals = 0u64;
    while h >= opts.tol && evals < opts.max_evaluations {
        let mut improved = false;
        for &coord in &coords {
            for sgn in [1.0, -1.0] {
                let step = if matches!(coord, Coord::Prep { imag: true, .. } | Coord::Effect { imag: true, .. }) {
                    C::new(0.0, sgn * h)
                } else {
                    C::new(sgn * h, 0.0)
                };
                let cand = match coord {
                    Coord::Prep { j, c, .. } => {
                        let old = eng.preps[j].clone();
                        let col = eng.col(j);
                        eng.preps[j][c] += step;
                        normalize(&mut eng.preps[j]);
                        eng.refresh_col(j);
                        let v = eng.det().abs();
                        if v > cur {
                            Ok(v)
                        } else {
                            eng.preps[j] = old;
                            eng.set_col(j, &col);
                            Err(())
                        }
                    }
                    Coord::Effect { i, col, c, .. } => {
                        let old = eng.effects[i].clone();
                        let row = eng.row(i);
                        let mut raw = old.clone();
                        raw[col][c] += step;
                        // the touched column leads so it keeps its direction
                        raw.swap(0, col);
                        let mut cols = orthonormalize(&raw, &support, dim);
                        cols.swap(0, col);
                        if cols.len() != old.len() {
                            continue;
                        }
                        eng.effects[i] = cols;
                        eng.refresh_row(i);
                        let v = eng.det().abs();
                        if v > cur {
                            Ok(v)
                        } else {
                            eng.effects[i] = old;
                            eng.set_row(i, &row);
                            Err(())
                        }
                    }
                };
                evals += 1;
                if let Ok(v) = cand {
                    if !v.is_finite() {
                        return Err(Error::NumericIntegrity("objective is not finite".into()));
                    }
                    cur = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    let out = eng.scenario(field)?;
    // re-evaluate through the validated path so the reported value is exact
    let value = crate::witness::witness(&crate::scenario::build_probability_matrix(&out)?).abs();
    Ok((out, value))
}

/// Independent annealing runs from random starts, best one kept.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub best: OptimizationResult,
    pub best_restart: usize,
    /// Final value of every restart, in restart order.
    pub values: Vec<f64>,
}

/// Runs `restarts` annealings in parallel. Restart `r` starts from uniform
/// angles drawn from its own stream and anneals with seed
/// `derive_seed(seed, [r])`, so the result does not depend on thread count.
pub fn optimize(
    params: &AngleParametrization,
    schedule: &AnnealSchedule,
    restarts: usize,
    refine_opts: Option<&RefineOptions>,
) -> Result<MultiStart> {
    if restarts == 0 {
        return Err(Error::Structural("at least one restart is required".into()));
    }
    schedule.validate()?;
    let runs: Vec<OptimizationResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = rng::derive_seed(schedule.seed, &[r as u64]);
            let mut g = rng::stream(seed, &[u64::MAX]);
            let start: Vec<f64> = (0..params.angle_count()).map(|_| g.random_range(0.0..TAU)).collect();
            let p = params.clone().with_angles(start)?;
            let mut res = anneal(&p, &schedule.clone().with_seed(seed))?;
            if let Some(o) = refine_opts {
                let (sc, v) = refine(&res.best_scenario, o)?;
                if v > res.best_value {
                    res.best_scenario = sc;
                }
                res.refined_value = Some(v);
            }
            Ok(res)
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.value()).collect();
    let best_restart = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    Ok(MultiStart { best: runs[best_restart].clone(), best_restart, values })
}

/// Results of annealing every uniform rank profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSweep {
    /// `(rank, result)` for `rank = 1..=max(1, d/2)`.
    pub runs: Vec<(usize, MultiStart)>,
    /// Index into `runs` of the best value (lowest rank on exact ties).
    pub argmax: usize,
    /// Indices whose value is within 1e-6 of the best.
    pub ties: Vec<usize>,
}

pub const TIE_TOL: f64 = 1e-6;

pub fn rank_sweep(
    d: usize,
    k: usize,
    field: Field,
    schedule: &AnnealSchedule,
    restarts: usize,
    refine_opts: Option<&RefineOptions>,
) -> Result<RankSweep> {
    if d == 0 || d > 6 || k == 0 || k > 9 {
        return Err(Error::Capability(format!("rank sweep supports d <= 6, k <= 9 (got d = {d}, k = {k})")));
    }
    let max_rank = (d / 2).max(1);
    let runs = (1..=max_rank)
        .map(|t| {
            let par = AngleParametrization::uniform(d, field, k, t)?;
            Ok((t, optimize(&par, schedule, restarts, refine_opts)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let vals: Vec<f64> = runs.iter().map(|(_, m)| m.best.value()).collect();
    let argmax = vals.iter().enumerate().fold(0, |b, (i, &v)| if v > vals[b] { i } else { b });
    let ties = (0..vals.len()).filter(|&i| vals[argmax] - vals[i] <= TIE_TOL).collect();
    Ok(RankSweep { runs, argmax, ties })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::build_probability_matrix;
    use crate::witness::witness;

    #[test]
    fn angle_counts_follow_the_staircase() {
        assert_eq!(AngleParametrization::uniform(4, Field::Complex, 4, 1).unwrap().angle_count(), 39);
        assert_eq!(AngleParametrization::uniform(4, Field::Complex, 4, 2).unwrap().angle_count(), 63);
        // real: moduli only
        assert_eq!(AngleParametrization::uniform(4, Field::Real, 4, 1).unwrap().angle_count(), 21);
        assert_eq!(AngleParametrization::uniform(2, Field::Real, 2, 1).unwrap().angle_count(), 4);
    }

    #[test]
    fn zero_angles_decode_to_e1() {
        let par = AngleParametrization::uniform(3, Field::Complex, 3, 1).unwrap();
        let s = decode(&par).unwrap();
        for p in s.preparations() {
            assert_eq!(p.pure_state().unwrap().amplitudes(), StateVector::basis(3, 0).amplitudes());
        }
        assert_eq!(witness(&build_probability_matrix(&s).unwrap()), 0.0);
    }

    #[test]
    fn fast_objective_matches_validated_path() {
        let mut g = rng::stream(5, &[]);
        for (d, field, k, t) in [(2, Field::Complex, 3, 1), (4, Field::Complex, 4, 2), (3, Field::Real, 5, 1)] {
            let par = AngleParametrization::uniform(d, field, k, t).unwrap();
            let angles = (0..par.angle_count()).map(|_| g.random_range(0.0..TAU)).collect();
            let par = par.with_angles(angles).unwrap();
            let s = decode(&par).unwrap();
            assert_eq!(s.field(), field);
            let w = witness(&build_probability_matrix(&s).unwrap()).abs();
            assert!((w - objective(&par)).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_blocks_are_appended() {
        let par = AngleParametrization::new(4, Field::Real, 1, vec![1], vec![vec![3]]).unwrap();
        let s = decode(&par.clone().with_angles(vec![0.3; par.angle_count()]).unwrap()).unwrap();
        let cols = s.effects()[0].columns().unwrap();
        assert_eq!(cols.len(), 2);
        assert_eq!(cols[1].amplitudes(), StateVector::basis(4, 3).amplitudes());
        assert_eq!(cols[0].amplitudes()[3], ZERO);
        assert!(AngleParametrization::new(2, Field::Real, 1, vec![2], vec![vec![0]]).is_err());
    }

    #[test]
    fn default_schedule() {
        let s = AnnealSchedule::default();
        assert_eq!(s.max_stages, 12);
        assert!(AnnealSchedule { ratio: 1.0, ..s }.validate().is_err());
    }

    #[test]
    fn anneal_is_deterministic_and_counts_evaluations() {
        let par = AngleParametrization::uniform(2, Field::Real, 2, 1).unwrap();
        let sched = AnnealSchedule { sweeps_per_stage: 20, max_stages: 6, ..AnnealSchedule::default() };
        let a = anneal(&par, &sched).unwrap();
        let b = anneal(&par, &sched).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evaluations, 6 * 20 * 4);
        assert_eq!(a.trace.len(), 6);
        assert!(a.trace.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn refine_never_decreases() {
        let mut g = rng::stream(9, &[]);
        let par = AngleParametrization::uniform(3, Field::Complex, 3, 1).unwrap();
        let angles = (0..par.angle_count()).map(|_| g.random_range(0.0..TAU)).collect();
        let par = par.with_angles(angles).unwrap();
        let start = objective(&par);
        let (_, v) = refine(&decode(&par).unwrap(), &RefineOptions { max_evaluations: 20_000, ..Default::default() })
            .unwrap();
        assert!(v >= start - 1e-12);
    }
}
