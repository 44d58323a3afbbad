//! Numerical tolerances.
//!
//! One knob set, passed explicitly where a routine makes an accept/reject
//! decision. Equality checks are relative-Frobenius, positivity checks are
//! scaled by `1 + ||A||`, and rank cuts are relative to the top eigenvalue.

#[derive(Debug, Clone, Copy)]
pub struct Tol {
    /// Relative Frobenius tolerance for matrix equality.
    pub eq: f64,
    /// Positive semidefiniteness slack: eigenvalues above `-psd * (1 + ||A||)` pass.
    pub psd: f64,
    /// Rank cut: eigenvalues/singular values below `rank * max` are treated as zero.
    pub rank: f64,
    /// Modulus slack for calling a transfer eigenvalue peripheral.
    pub peripheral: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Self {
            eq: 1e-9,
            psd: 1e-9,
            rank: 1e-10,
            peripheral: 1e-6,
        }
    }
}

impl Tol {
    /// Uniformly scale all tolerances (used by the CLI override).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            eq: self.eq * factor,
            psd: self.psd * factor,
            rank: self.rank * factor,
            peripheral: self.peripheral * factor,
        }
    }
}
