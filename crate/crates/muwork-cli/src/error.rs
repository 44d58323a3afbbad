//! CLI failure modes and the exit-code contract.
//!
//! Exit codes: 0 success/certified, 2 input error, 3 inconclusive,
//! 4 internal numerical failure. Inconclusive outcomes are not errors — the
//! commands return them alongside a best-effort report — so this type only
//! distinguishes "the input was bad" from "the numerics gave out".

use std::fmt;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparseable, or invalid input (exit 2).
    Input(String),
    /// Internal numerical failure (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<muwork::Error> for CliError {
    fn from(e: muwork::Error) -> Self {
        use muwork::Error::*;
        match e {
            NotSquare { .. }
            | Dimension { .. }
            | EmptySet
            | NotHermitian { .. }
            | NotPsd { .. }
            | NotTracePreserving { .. }
            | NotUnital { .. }
            | BadMixture { .. }
            | NotAnAlgebra { .. }
            | BlockForm { .. }
            | NotFixed { .. }
            | Precondition(_)
            | Domain(_)
            | SizeLimit(_) => CliError::Input(e.to_string()),
            // NoCertificate and Stagnation are matched in-band by the
            // commands that can report a best residual; when one reaches
            // this blanket conversion the failure was outside the command's
            // certified/inconclusive protocol
            NoCertificate { .. }
            | Stagnation { .. }
            | StructureSearch { .. }
            | EigenFailure
            | Inconsistency(_)
            | Pole { .. } => CliError::Numerical(e.to_string()),
        }
    }
}
