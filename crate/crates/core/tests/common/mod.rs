#![allow(dead_code)]

use dimwit::detect::random_state;
use dimwit::{gram_schmidt, Effect, Field, Preparation, Scenario, StateVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Projector onto the span of `rank` random vectors.
pub fn random_effect<R: Rng>(g: &mut R, d: usize, field: Field, rank: usize) -> Effect {
    let vs: Vec<StateVector> = (0..rank).map(|_| random_state(g, d, field)).collect();
    Effect::from_columns(d, gram_schmidt(&vs).unwrap()).unwrap()
}

/// Pure or, one time in four, a mixture of two pure states.
pub fn random_preparation<R: Rng>(g: &mut R, d: usize, field: Field) -> Preparation {
    let a = random_state(g, d, field);
    if g.random_range(0..4) > 0 {
        return Preparation::from_pure(a);
    }
    let b = random_state(g, d, field);
    let lam: f64 = g.random();
    Preparation::from_matrix(a.projector() * Complex64::from(lam) + b.projector() * Complex64::from(1.0 - lam)).unwrap()
}

pub fn random_scenario<R: Rng>(g: &mut R, d: usize, field: Field, k: usize) -> Scenario {
    let preps = (0..=k).map(|_| random_preparation(g, d, field)).collect();
    let effs = (0..k)
        .map(|_| {
            let rank = g.random_range(1..=d.max(2) - 1);
            random_effect(g, d, field, rank)
        })
        .collect();
    Scenario::new(d, field, preps, effs).unwrap()
}

/// Pure-state scenario with rank-one effects.
pub fn random_pure_scenario<R: Rng>(g: &mut R, d: usize, field: Field, k: usize) -> Scenario {
    let preps = (0..=k).map(|_| Preparation::from_pure(random_state(g, d, field))).collect();
    let effs = (0..k).map(|_| random_effect(g, d, field, 1)).collect();
    Scenario::new(d, field, preps, effs).unwrap()
}

/// Columns of a random unitary (orthogonal for the real field).
pub fn random_unitary<R: Rng>(g: &mut R, d: usize, field: Field) -> DMatrix<Complex64> {
    let cols: Vec<StateVector> = (0..d).map(|_| random_state(g, d, field)).collect();
    let q = gram_schmidt(&cols).unwrap();
    DMatrix::from_fn(d, d, |r, c| q[c].amplitudes()[r])
}

pub fn rotate(u: &DMatrix<Complex64>, p: &Preparation) -> Preparation {
    match p.pure_state() {
        Some(v) => {
            let w = u * nalgebra::DVector::from_column_slice(v.amplitudes());
            Preparation::from_pure(StateVector::normalized(w.iter().copied().collect(), v.field()).unwrap())
        }
        None => Preparation::from_matrix(u * p.matrix() * u.adjoint()).unwrap(),
    }
}
