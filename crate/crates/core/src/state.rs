//! Pure states, preparations and measurement effects.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Smallest residual norm accepted by Gram-Schmidt before renormalizing.
pub const DEPENDENCE_TOL: f64 = 1e-8;

/// Whether amplitudes and operators are restricted to real numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => write!(f, "real"),
            Field::Complex => write!(f, "complex"),
        }
    }
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" | "r" => Ok(Field::Real),
            "complex" | "c" => Ok(Field::Complex),
            other => Err(Error::Parse(format!("unknown field `{other}`"))),
        }
    }
}

/// A unit vector in C^d (or R^d when the field is real).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    field: Field,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amps: Vec<Complex64>, field: Field) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Structural("state vector of dimension 0".into()));
        }
        if field == Field::Real && amps.iter().any(|a| a.im != 0.0) {
            return Err(Error::Structural(
                "real state vector with a nonzero imaginary part".into(),
            ));
        }
        let norm = norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NumericIntegrity(format!(
                "state vector norm {norm} differs from 1"
            )));
        }
        Ok(Self { amps, field })
    }

    /// Scales `amps` to unit norm.
    pub fn normalized(amps: Vec<Complex64>, field: Field) -> Result<Self> {
        let n = norm(&amps);
        if !(n > DEPENDENCE_TOL) || !n.is_finite() {
            return Err(Error::Degenerate(format!("cannot normalize vector of norm {n}")));
        }
        Self::new(amps.into_iter().map(|a| a / n).collect(), field)
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::normalized(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect(), Field::Real)
    }

    /// Picks the field from the data: real when every imaginary part is zero.
    pub fn from_complex(amps: Vec<Complex64>) -> Result<Self> {
        let field = if amps.iter().all(|a| a.im == 0.0) { Field::Real } else { Field::Complex };
        Self::normalized(amps, field)
    }

    /// The `index`-th computational basis vector (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amps, field: Field::Real }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn is_real(&self) -> bool {
        self.amps.iter().all(|a| a.im == 0.0)
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        inner(&self.amps, &other.amps)
    }

    /// `|self><self|`
    pub fn projector(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.amps[r] * self.amps[c].conj())
    }

    /// Pads with zeros up to `dim` components.
    pub fn embed(&self, dim: usize) -> Result<StateVector> {
        if dim < self.dim() {
            return Err(Error::Structural(format!(
                "cannot embed dimension {} into {dim}",
                self.dim()
            )));
        }
        let mut amps = self.amps.clone();
        amps.resize(dim, Complex64::new(0.0, 0.0));
        Ok(Self { amps, field: self.field })
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect()
}

fn check_hermitian(m: &DMatrix<Complex64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Structural(format!("{what} matrix must be square and nonempty")));
    }
    let dev = max_abs_diff(m, &m.adjoint());
    if dev > NORM_TOL {
        return Err(Error::NumericIntegrity(format!("{what} is not Hermitian (deviation {dev})")));
    }
    Ok(())
}

/// A density matrix `X >= 0`, `Tr X = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preparation {
    matrix: DMatrix<Complex64>,
    pure: Option<StateVector>,
}

impl Preparation {
    pub fn from_pure(v: StateVector) -> Self {
        Self { matrix: v.projector(), pure: Some(v) }
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        check_hermitian(&matrix, "preparation")?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::NumericIntegrity(format!("preparation trace {tr} is not 1")));
        }
        let min = hermitian_eigenvalues(&matrix).into_iter().fold(f64::INFINITY, f64::min);
        if min < -SPECTRAL_TOL {
            return Err(Error::NumericIntegrity(format!(
                "preparation has negative eigenvalue {min}"
            )));
        }
        Ok(Self { matrix, pure: None })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// The state vector when the preparation was built from one.
    pub fn pure_state(&self) -> Option<&StateVector> {
        self.pure.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }
}

/// A measurement operator `0 <= Y <= 1` for the "yes" outcome.
///
/// Effects built from orthonormal columns keep them so that probabilities
/// of pure states reduce to overlaps; raw matrices are accepted for
/// perturbative work.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    matrix: DMatrix<Complex64>,
    columns: Option<Vec<StateVector>>,
}

impl Effect {
    /// The projector onto the span of `columns`, which must be orthonormal.
    pub fn from_columns(dim: usize, columns: Vec<StateVector>) -> Result<Self> {
        if columns.len() > dim {
            return Err(Error::Structural(format!(
                "{} projector columns exceed dimension {dim}",
                columns.len()
            )));
        }
        for c in &columns {
            if c.dim() != dim {
                return Err(Error::Structural(format!(
                    "effect column of dimension {} in a {dim}-dimensional effect",
                    c.dim()
                )));
            }
        }
        for (a, ca) in columns.iter().enumerate() {
            for cb in &columns[a + 1..] {
                let ov = ca.inner(cb).norm();
                if ov > SPECTRAL_TOL {
                    return Err(Error::NumericIntegrity(format!(
                        "effect columns not orthogonal (overlap {ov})"
                    )));
                }
            }
        }
        let mut matrix = DMatrix::zeros(dim, dim);
        for c in &columns {
            matrix += c.projector();
        }
        Ok(Self { matrix, columns: Some(columns) })
    }

    /// Raw Hermitian effect with spectrum in [0, 1].
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        check_hermitian(&matrix, "effect")?;
        for ev in hermitian_eigenvalues(&matrix) {
            if ev < -SPECTRAL_TOL || ev > 1.0 + SPECTRAL_TOL {
                return Err(Error::NumericIntegrity(format!(
                    "effect eigenvalue {ev} outside [0, 1]"
                )));
            }
        }
        Ok(Self { matrix, columns: None })
    }

    /// Like [`Effect::from_matrix`], but recovers projector columns when the
    /// matrix is an orthogonal projector.
    pub fn from_projector_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        check_hermitian(&matrix, "effect")?;
        let eig = SymmetricEigen::new(matrix.clone());
        let mut columns = Vec::new();
        for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
            if (ev - 1.0).abs() <= SPECTRAL_TOL {
                let v: Vec<Complex64> = eig.eigenvectors.column(idx).iter().copied().collect();
                columns.push(StateVector::from_complex(v)?);
            } else if ev.abs() > SPECTRAL_TOL {
                return Self::from_matrix(matrix);
            }
        }
        Ok(Self { matrix, columns: Some(columns) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn columns(&self) -> Option<&[StateVector]> {
        self.columns.as_deref()
    }

    /// Number of projector columns, or the numerical rank of a raw matrix.
    pub fn rank(&self) -> usize {
        match &self.columns {
            Some(c) => c.len(),
            None => hermitian_eigenvalues(&self.matrix)
                .into_iter()
                .filter(|ev| *ev > SPECTRAL_TOL)
                .count(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }
}

/// Orthonormalizes `vs` in order (modified Gram-Schmidt).
///
/// The first vector keeps its direction. Fails when a residual norm drops
/// below [`DEPENDENCE_TOL`].
pub fn gram_schmidt(vs: &[StateVector]) -> Result<Vec<StateVector>> {
    let mut out: Vec<StateVector> = Vec::with_capacity(vs.len());
    for (idx, v) in vs.iter().enumerate() {
        if let Some(first) = vs.first() {
            if v.dim() != first.dim() {
                return Err(Error::Structural("Gram-Schmidt over mixed dimensions".into()));
            }
        }
        let mut w = v.amps.clone();
        for u in &out {
            let c = inner(&u.amps, &w);
            for (wi, ui) in w.iter_mut().zip(&u.amps) {
                *wi -= c * ui;
            }
        }
        let n = norm(&w);
        if n < DEPENDENCE_TOL {
            return Err(Error::Degenerate(format!(
                "vector {idx} is linearly dependent on its predecessors (residual {n:e})"
            )));
        }
        let field = if out.iter().all(|u| u.field == Field::Real) && v.field == Field::Real {
            Field::Real
        } else {
            Field::Complex
        };
        let amps: Vec<Complex64> = w.into_iter().map(|a| a / n).collect();
        out.push(StateVector { amps, field });
    }
    Ok(out)
}

fn pauli_combination(v: [f64; 3]) -> DMatrix<Complex64> {
    let [x, y, z] = v;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    DMatrix::from_row_slice(
        2,
        2,
        &[c((1.0 + z) / 2.0, 0.0), c(x / 2.0, -y / 2.0), c(x / 2.0, y / 2.0), c((1.0 - z) / 2.0, 0.0)],
    )
}

fn bloch_norm(v: [f64; 3]) -> Result<f64> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n > 1.0 + NORM_TOL || !n.is_finite() {
        return Err(Error::InvalidBloch(n));
    }
    Ok(n)
}

/// The pure qubit state with Bloch vector `v` (|v| = 1).
///
/// Amplitudes are real whenever `v` has no y component.
pub fn bloch_vector_state(v: [f64; 3]) -> Result<StateVector> {
    let n = bloch_norm(v)?;
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Structural(format!("Bloch vector of norm {n} is not pure")));
    }
    let [x, y, z] = [v[0] / n, v[1] / n, v[2] / n];
    let a = ((1.0 + z) / 2.0).max(0.0).sqrt();
    let amps = if a > 1e-9 {
        vec![Complex64::new(a, 0.0), Complex64::new(x / (2.0 * a), y / (2.0 * a))]
    } else {
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
    };
    StateVector::from_complex(amps)
}

/// `2X = 1 + v.sigma`; pure when |v| = 1.
pub fn bloch_state(v: [f64; 3]) -> Result<Preparation> {
    let n = bloch_norm(v)?;
    if (n - 1.0).abs() <= NORM_TOL {
        Ok(Preparation::from_pure(bloch_vector_state(v)?))
    } else {
        Preparation::from_matrix(pauli_combination(v))
    }
}

/// `2Y = 1 + v.sigma`; a rank-1 projector when |v| = 1.
pub fn bloch_effect(v: [f64; 3]) -> Result<Effect> {
    let n = bloch_norm(v)?;
    if (n - 1.0).abs() <= NORM_TOL {
        Effect::from_columns(2, vec![bloch_vector_state(v)?])
    } else {
        Effect::from_matrix(pauli_combination(v))
    }
}
