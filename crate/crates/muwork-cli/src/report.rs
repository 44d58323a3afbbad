//! The report document every subcommand emits.
//!
//! One envelope with optional per-command sections, shipped alongside
//! `schemas/report.schema.json`. Serialization is deterministic (fixed field
//! order, no timestamps unless `--timing` is passed), so identical inputs and
//! seeds reproduce reports byte for byte. Key residuals carry both the raw
//! value and a 3-significant-figure rendering.

use muwork::channel_core::cmat::C64;
use serde::{Deserialize, Serialize};

use crate::io::{MatrixJson, VectorJson};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// "ok" | "certified" | "inconclusive" | "pass" | "fail"
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status_detail: Option<String>,
    /// Thread count actually used (internal parallelism is not enabled, so 1).
    pub threads: usize,
    /// Scale applied to every tolerance via MUWORK_TOL_OVERRIDE (1 when unset).
    pub tol_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// The parsed input document, echoed verbatim.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<ChannelFlags>,
    /// Eigenvalues of the Choi matrix, descending.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choi_spectrum: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionInfo>,
    /// Best residual reached when no certificate was produced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_residual: Option<ResidualInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selftest: Option<SelftestInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingInfo>,
    /// Human-readable rendering of the sections above.
    pub text: String,
}

impl Report {
    pub fn new(command: &str, status: &str) -> Self {
        Report {
            tool: "muwork".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            status: status.into(),
            status_detail: None,
            threads: 1,
            tol_scale: 1.0,
            seed: None,
            input: None,
            flags: None,
            choi_spectrum: None,
            algebra: None,
            spectral: None,
            certificate: None,
            power: None,
            corr: None,
            decomposition: None,
            best_residual: None,
            selftest: None,
            timing: None,
            text: String::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFlags {
    pub trace_preserving: bool,
    pub unital: bool,
    pub tp_defect: f64,
    pub unital_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraInfo {
    /// Block signature `[(m, n), ...]`: the algebra is `⊕ M_m ⊗ I_n`.
    pub blocks: Vec<(usize, usize)>,
    pub d: usize,
    pub dim_algebra: usize,
    pub dim_commutant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl ComplexJson {
    pub fn from_c64(z: C64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralInfo {
    /// All transfer eigenvalues, descending modulus.
    pub eigenvalues: Vec<ComplexJson>,
    /// Those within the peripheral tolerance of the unit circle.
    pub peripheral: Vec<ComplexJson>,
    pub period: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateInfo {
    pub p_num: u64,
    pub p_den: u64,
    pub p: f64,
    /// "trivial" | "single_block" | "multi_block" for mixing certificates;
    /// "quadrature" | "rank" for correlation certificates.
    pub branch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerInfo {
    /// Smallest certified power, absent when the search was inconclusive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub kmax: usize,
    pub attempts: Vec<AttemptInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttemptInfo {
    pub k: usize,
    pub fixed_blocks: Vec<(usize, usize)>,
    pub p_num: u64,
    pub p_den: u64,
    pub inside_ball: bool,
    pub min_eig: f64,
    pub unitary_shortcut: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrInfo {
    /// "quadrature" | "rank" | "z2"
    pub mode: String,
    pub d: usize,
    pub rank: usize,
    /// z2 only: whether the matrix lies in the sign-vector hull.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member: Option<bool>,
    /// The reconstructed mixture target (e.g. `(C + (d−1)I)/d`).
    pub target: MatrixJson,
    pub atoms: Vec<VectorJson>,
    pub weights: Vec<f64>,
    pub weight_sum: f64,
    pub residual: ResidualInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionInfo {
    pub atoms: usize,
    pub weights: Vec<f64>,
    pub weight_sum: f64,
    pub unitaries: Vec<MatrixJson>,
    pub residual: ResidualInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualInfo {
    pub raw: f64,
    pub sig3: String,
}

impl ResidualInfo {
    pub fn new(raw: f64) -> Self {
        ResidualInfo {
            raw,
            sig3: sig3(raw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestInfo {
    pub level: String,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckInfo {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingInfo {
    pub total_ms: f64,
}

/// Three significant figures in scientific notation, e.g. `9.70e-7`.
pub fn sig3(x: f64) -> String {
    format!("{x:.2e}")
}
