//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty operator set")]
    EmptySet,

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("channel is not trace preserving (defect {defect:.3e})")]
    NotTracePreserving { defect: f64 },

    #[error("channel is not unital (defect {defect:.3e})")]
    NotUnital { defect: f64 },

    #[error("mixture weights must be nonnegative and sum to one (sum {sum:.6})")]
    BadMixture { sum: f64 },

    #[error("basis does not span a unital *-algebra (closure residual {residual:.3e})")]
    NotAnAlgebra { residual: f64 },

    #[error("algebra structure search failed after {attempts} attempts: {reason}")]
    StructureSearch { attempts: usize, reason: String },

    #[error("operator does not have the expected block form (residual {residual:.3e})")]
    BlockForm { residual: f64 },

    #[error("algebra is not pointwise fixed by the channel (defect {defect:.3e})")]
    NotFixed { defect: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no certificate within {atoms} atoms (best residual {residual:.3e})")]
    NoCertificate { residual: f64, atoms: usize },

    #[error("iteration stagnated at residual {residual:.3e} after {iterations} iterations")]
    Stagnation { residual: f64, iterations: usize },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("density evaluated at a pole (|1 - c e^(i theta)| = {dist:.3e})")]
    Pole { dist: f64 },

    #[error("eigenvalue/singular value iteration failed to converge")]
    EigenFailure,

    #[error("numerical inconsistency: {0}")]
    Inconsistency(String),

    #[error("problem size exceeds supported range: {0}")]
    SizeLimit(String),
}
