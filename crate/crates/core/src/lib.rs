//! Determinant-based dimension witnesses for prepare-and-measure scenarios.
//!
//! `k + 1` preparations and `k` binary measurements give a `(k+1) x (k+1)`
//! matrix of outcome probabilities, completed by a row of ones for the
//! trivial always-yes measurement. Its determinant `W_k` vanishes whenever
//! the system carrying the preparation has too few levels: `k >= d`
//! classically, `k >= d(d+1)/2` for real and `k >= d^2` for complex
//! quantum systems.

pub mod classical;
pub mod detect;
pub mod error;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod registry;
pub mod rng;
pub mod scenario;
pub mod state;
pub mod witness;

pub use error::{Error, Result};
pub use scenario::{build_probability_matrix, probability, ProbabilityMatrix, Scenario};
pub use state::{bloch_effect, bloch_state, gram_schmidt, Effect, Field, Preparation, StateVector};
pub use witness::{adjugate, minimal_counts, minor, reduce_columns, witness, Model, WitnessReport};

/// Library version embedded in result files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
