//! Scenarios and their probability matrices.
//!
//! Rows index measurements and columns index preparations throughout. The
//! always-yes measurement is never stored in a [`Scenario`]; it appears only
//! as the final all-ones row of a [`ProbabilityMatrix`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::{Effect, Field, Preparation, NORM_TOL, SPECTRAL_TOL};

/// `k + 1` preparations and `k` effects on a common `d`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    dim: usize,
    field: Field,
    preparations: Vec<Preparation>,
    effects: Vec<Effect>,
}

impl Scenario {
    pub fn new(
        dim: usize,
        field: Field,
        preparations: Vec<Preparation>,
        effects: Vec<Effect>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Structural("scenario dimension must be positive".into()));
        }
        if effects.is_empty() {
            return Err(Error::Structural("scenario needs at least one effect".into()));
        }
        if preparations.len() != effects.len() + 1 {
            return Err(Error::Structural(format!(
                "{} preparations for {} effects; exactly k + 1 are required",
                preparations.len(),
                effects.len()
            )));
        }
        if let Some(p) = preparations.iter().find(|p| p.dim() != dim) {
            return Err(Error::Structural(format!(
                "preparation of dimension {} in a {dim}-dimensional scenario",
                p.dim()
            )));
        }
        if let Some(e) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::Structural(format!(
                "effect of dimension {} in a {dim}-dimensional scenario",
                e.dim()
            )));
        }
        if field == Field::Real
            && (preparations.iter().any(|p| !p.is_real()) || effects.iter().any(|e| !e.is_real()))
        {
            return Err(Error::Structural("real scenario contains complex entries".into()));
        }
        Ok(Self { dim, field, preparations, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Number of performed measurements.
    pub fn k(&self) -> usize {
        self.effects.len()
    }

    pub fn preparations(&self) -> &[Preparation] {
        &self.preparations
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    /// True when every preparation is pure and every effect has projector columns.
    pub fn is_vector_form(&self) -> bool {
        self.preparations.iter().all(|p| p.pure_state().is_some())
            && self.effects.iter().all(|e| e.columns().is_some())
    }

    /// The same scenario with a different preparation in slot `j`.
    pub fn with_preparation(&self, j: usize, prep: Preparation) -> Result<Self> {
        if j >= self.preparations.len() {
            return Err(Error::IndexOutOfRange(format!("preparation {j}")));
        }
        let mut preps = self.preparations.clone();
        preps[j] = prep;
        Self::new(self.dim, self.field, preps, self.effects.clone())
    }
}

/// `(k+1) x (k+1)` matrix of outcome probabilities, last row all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    entries: DMatrix<f64>,
}

impl ProbabilityMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n < 2 || entries.ncols() != n {
            return Err(Error::Structural(format!(
                "probability matrix must be square with side >= 2, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        for ((r, c), v) in entries.iter().enumerate().map(|(i, v)| ((i % n, i / n), v)) {
            if !v.is_finite() || *v < -NORM_TOL || *v > 1.0 + NORM_TOL {
                return Err(Error::NumericIntegrity(format!(
                    "probability entry ({r}, {c}) = {v} outside [0, 1]"
                )));
            }
        }
        if (0..n).any(|c| (entries[(n - 1, c)] - 1.0).abs() > NORM_TOL) {
            return Err(Error::Structural("last row must be the always-yes row of ones".into()));
        }
        Ok(Self { entries })
    }

    /// Appends the always-yes row to `k x (k+1)` measured probabilities.
    pub fn from_measured(rows: &DMatrix<f64>) -> Result<Self> {
        let k = rows.nrows();
        if rows.ncols() != k + 1 {
            return Err(Error::Structural(format!(
                "measured block must be k x (k+1), got {}x{}",
                k,
                rows.ncols()
            )));
        }
        let entries = DMatrix::from_fn(k + 1, k + 1, |r, c| if r < k { rows[(r, c)] } else { 1.0 });
        Self::new(entries)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Structural("ragged probability matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn k(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// The measured `k x (k+1)` block, without the always-yes row.
    /// All `k+1` rows, the ones row last.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn measured(&self) -> DMatrix<f64> {
        self.entries.rows(0, self.k()).into_owned()
    }
}

/// `Tr(Y X)`, the probability that effect `eff` fires on `prep`.
pub fn probability(prep: &Preparation, eff: &Effect) -> Result<f64> {
    if prep.dim() != eff.dim() {
        return Err(Error::Structural(format!(
            "preparation dimension {} does not match effect dimension {}",
            prep.dim(),
            eff.dim()
        )));
    }
    let raw = match (prep.pure_state(), eff.columns()) {
        (Some(x), Some(cols)) => cols.iter().map(|c| c.inner(x).norm_sqr()).sum::<f64>(),
        _ => {
            let tr = (eff.matrix() * prep.matrix()).trace();
            if tr.im.abs() > SPECTRAL_TOL {
                return Err(Error::NumericIntegrity(format!(
                    "Tr(YX) has imaginary part {}",
                    tr.im
                )));
            }
            tr.re
        }
    };
    if raw < -SPECTRAL_TOL || raw > 1.0 + SPECTRAL_TOL {
        return Err(Error::NumericIntegrity(format!("probability {raw} outside [0, 1]")));
    }
    Ok(raw.clamp(0.0, 1.0))
}

pub fn build_probability_matrix(s: &Scenario) -> Result<ProbabilityMatrix> {
    let k = s.k();
    let mut entries = DMatrix::from_element(k + 1, k + 1, 1.0);
    for (i, eff) in s.effects().iter().enumerate() {
        for (j, prep) in s.preparations().iter().enumerate() {
            entries[(i, j)] = probability(prep, eff)?;
        }
    }
    ProbabilityMatrix::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bloch_effect, bloch_state, StateVector};

    #[test]
    fn probability_of_basis_states() {
        let x = Preparation::from_pure(StateVector::basis(2, 0));
        let y1 = Effect::from_columns(2, vec![StateVector::basis(2, 0)]).unwrap();
        let y2 = Effect::from_columns(2, vec![StateVector::basis(2, 1)]).unwrap();
        assert_eq!(probability(&x, &y1).unwrap(), 1.0);
        assert_eq!(probability(&x, &y2).unwrap(), 0.0);
    }

    #[test]
    fn bloch_probability_is_half_for_orthogonal_axes() {
        let x = bloch_state([0.0, 0.0, 1.0]).unwrap();
        let y = bloch_effect([1.0, 0.0, 0.0]).unwrap();
        assert!((probability(&x, &y).unwrap() - 0.5).abs() < 1e-15);
        // matrix path agrees with the overlap path
        let ym = Effect::from_matrix(y.matrix().clone()).unwrap();
        assert!((probability(&x, &ym).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn probability_rejects_dimension_mismatch() {
        let x = Preparation::from_pure(StateVector::basis(3, 0));
        let y = Effect::from_columns(2, vec![StateVector::basis(2, 0)]).unwrap();
        assert!(matches!(probability(&x, &y), Err(Error::Structural(_))));
    }

    #[test]
    fn scenario_requires_k_plus_one_preparations() {
        let x = Preparation::from_pure(StateVector::basis(2, 0));
        let y = Effect::from_columns(2, vec![StateVector::basis(2, 0)]).unwrap();
        assert!(Scenario::new(2, Field::Real, vec![x.clone()], vec![y.clone()]).is_err());
        assert!(Scenario::new(2, Field::Real, vec![x.clone(), x], vec![y]).is_ok());
    }

    #[test]
    fn real_scenario_rejects_complex_states() {
        let x = bloch_state([0.0, 1.0, 0.0]).unwrap();
        let y = bloch_effect([0.0, 0.0, 1.0]).unwrap();
        let r = Scenario::new(2, Field::Real, vec![x.clone(), x], vec![y]);
        assert!(r.is_err());
    }

    #[test]
    fn equal_preparations_give_equal_columns() {
        let x = bloch_state([0.6, 0.0, 0.8]).unwrap();
        let ys = vec![bloch_effect([1.0, 0.0, 0.0]).unwrap(), bloch_effect([0.0, 0.0, 1.0]).unwrap()];
        let s = Scenario::new(2, Field::Real, vec![x.clone(), x.clone(), x], ys).unwrap();
        let pm = build_probability_matrix(&s).unwrap();
        for r in 0..3 {
            assert_eq!(pm.get(r, 0), pm.get(r, 1));
            assert_eq!(pm.get(r, 1), pm.get(r, 2));
        }
    }

    #[test]
    fn probability_matrix_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 1.2, 1.0, 1.0]);
        assert!(ProbabilityMatrix::new(bad).is_err());
        let no_ones = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 1.0, 0.9]);
        assert!(ProbabilityMatrix::new(no_ones).is_err());
        let m = ProbabilityMatrix::from_measured(&DMatrix::from_row_slice(1, 2, &[0.3, 0.7])).unwrap();
        assert_eq!(m.k(), 1);
        assert_eq!(m.get(1, 0), 1.0);
    }
}
