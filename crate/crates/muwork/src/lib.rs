//! Numerical toolkit for mixed-unitary structure of unital quantum channels.
//!
//! A unital channel that fixes a von Neumann algebra `A` pointwise can be
//! pushed into the convex hull of unitary conjugations from the commutant
//! `A'`: the mixture `p·Φ + (1−p)·E_A` with the trace-preserving conditional
//! expectation `E_A` is mixed unitary for an explicit `p` depending only on
//! the block structure of `A`. This crate computes the block structure, the
//! constant, and explicit finite decompositions, along with the spectral /
//! asymptotic machinery (Cesàro means, mixed-unitary powers) and the
//! Schur-multiplier picture for channels fixing the diagonal algebra.
//!
//! Modules:
//! - [`channel_core`]: complex matrices, Kraus/Choi/transfer representations.
//! - [`algebra`]: commutants, block decomposition `⊕ M_m ⊗ I_n`, conditional
//!   expectations.
//! - [`mixing`]: mixing constants, the averaged map `L`, guaranteed-ball
//!   tests, Frank–Wolfe mixed-unitary construction.
//! - [`asymptotics`]: transfer spectra, peripheral eigenvectors, Cesàro
//!   means, smallest mixed-unitary power.
//! - [`correlation`]: correlation matrices, Schur channels, rank-one
//!   quadrature and sign-vector decompositions.
//! - [`convex_solver`]: nonnegative least squares and fully corrective
//!   Frank–Wolfe over atom dictionaries.

pub mod algebra;
pub mod asymptotics;
pub mod channel_core;
pub mod convex_solver;
pub mod correlation;
pub mod error;
pub mod mixing;
pub mod tol;

pub use error::{Error, Result};
pub use tol::Tol;

/// Exact nonnegative rational, used for mixing constants (`p = num/den`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        Self { num, den }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}
