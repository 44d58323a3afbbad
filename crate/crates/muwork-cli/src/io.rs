//! On-disk JSON formats: channel files, correlation files, algebra files.
//!
//! Complex matrices are carried as separate row-major `re`/`im` arrays so
//! the artifacts stay diffable. Every document is strictly validated —
//! unknown fields, ragged rows, and dimension mismatches are input errors.

use std::path::Path;

use muwork::channel_core::cmat::{CMat, CVec, C64};
use muwork::channel_core::{depolarizing, map_to_diagonal, werner_holevo3, ChannelRep, ChoiMatrix};
use muwork::correlation::CorrelationMatrix;
use muwork::Tol;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A complex matrix as paired real/imaginary row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_cmat(m: &CMat) -> Self {
        let re = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
            .collect();
        let im = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
            .collect();
        MatrixJson { re, im }
    }

    pub fn to_cmat(&self, what: &str) -> Result<CMat, CliError> {
        let rows = self.re.len();
        if rows == 0 {
            return Err(CliError::Input(format!("{what}: matrix has no rows")));
        }
        let cols = self.re[0].len();
        if cols == 0 {
            return Err(CliError::Input(format!("{what}: matrix has no columns")));
        }
        if self.im.len() != rows {
            return Err(CliError::Input(format!(
                "{what}: re has {rows} rows but im has {}",
                self.im.len()
            )));
        }
        for (i, (r, c)) in self.re.iter().zip(&self.im).enumerate() {
            if r.len() != cols || c.len() != cols {
                return Err(CliError::Input(format!(
                    "{what}: ragged row {i} (expected {cols} entries)"
                )));
            }
        }
        Ok(CMat::from_fn(rows, cols, |i, j| {
            C64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

/// A complex vector as paired real/imaginary arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl VectorJson {
    pub fn from_cvec(v: &CVec) -> Self {
        VectorJson {
            re: v.iter().map(|e| e.re).collect(),
            im: v.iter().map(|e| e.im).collect(),
        }
    }
}

/// A channel on disk: explicit Kraus operators, an explicit Choi matrix, or
/// one of the named constructions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub d: usize,
    /// "kraus" | "choi" | "named"
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixJson>,
    /// "depolarizing" | "werner_holevo3" | "map_to_diagonal"
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Named-channel parameters; `d`, when present, must agree with the top level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

impl ChannelFile {
    pub fn to_channel(&self, tol: &Tol) -> Result<ChannelRep, CliError> {
        if self.d == 0 {
            return Err(CliError::Input("channel dimension d must be ≥ 1".into()));
        }
        match self.kind.as_str() {
            "kraus" => {
                let list = self.kraus.as_ref().ok_or_else(|| {
                    CliError::Input("kind \"kraus\" requires a \"kraus\" array".into())
                })?;
                if list.is_empty() {
                    return Err(CliError::Input("empty Kraus list".into()));
                }
                let mut ops = Vec::with_capacity(list.len());
                for (i, m) in list.iter().enumerate() {
                    let k = m.to_cmat(&format!("kraus[{i}]"))?;
                    if k.nrows() != self.d || k.ncols() != self.d {
                        return Err(CliError::Input(format!(
                            "kraus[{i}] is {}x{} but d = {}",
                            k.nrows(),
                            k.ncols(),
                            self.d
                        )));
                    }
                    ops.push(k);
                }
                Ok(ChannelRep::from_kraus(ops)?)
            }
            "choi" => {
                let m = self.choi.as_ref().ok_or_else(|| {
                    CliError::Input("kind \"choi\" requires a \"choi\" matrix".into())
                })?;
                let j = m.to_cmat("choi")?;
                let d2 = self.d * self.d;
                if j.nrows() != d2 || j.ncols() != d2 {
                    return Err(CliError::Input(format!(
                        "choi matrix is {}x{} but d² = {d2}",
                        j.nrows(),
                        j.ncols()
                    )));
                }
                Ok(ChannelRep::from_choi(ChoiMatrix::new(self.d, j)?, tol)?)
            }
            "named" => {
                let name = self.name.as_ref().ok_or_else(|| {
                    CliError::Input("kind \"named\" requires a \"name\"".into())
                })?;
                self.check_params()?;
                match name.as_str() {
                    "depolarizing" => Ok(depolarizing(self.d)),
                    "map_to_diagonal" => Ok(map_to_diagonal(self.d)),
                    "werner_holevo3" => {
                        if self.d != 3 {
                            return Err(CliError::Input(format!(
                                "werner_holevo3 is a d = 3 channel (file says d = {})",
                                self.d
                            )));
                        }
                        Ok(werner_holevo3())
                    }
                    other => Err(CliError::Input(format!(
                        "unknown named channel \"{other}\" (expected depolarizing, \
                         werner_holevo3, or map_to_diagonal)"
                    ))),
                }
            }
            other => Err(CliError::Input(format!(
                "unknown channel kind \"{other}\" (expected kraus, choi, or named)"
            ))),
        }
    }

    /// A distinct label for the channel source, used in report text.
    pub fn describe(&self) -> String {
        match self.kind.as_str() {
            "named" => format!(
                "named: {}",
                self.name.as_deref().unwrap_or("<missing>")
            ),
            "kraus" => format!(
                "{} Kraus operators",
                self.kraus.as_ref().map_or(0, Vec::len)
            ),
            _ => self.kind.clone(),
        }
    }

    fn check_params(&self) -> Result<(), CliError> {
        let Some(params) = &self.params else {
            return Ok(());
        };
        let obj = params
            .as_object()
            .ok_or_else(|| CliError::Input("\"params\" must be an object".into()))?;
        for (key, value) in obj {
            if key != "d" {
                return Err(CliError::Input(format!(
                    "unknown parameter \"{key}\" for named channel"
                )));
            }
            let pd = value.as_u64().ok_or_else(|| {
                CliError::Input("parameter \"d\" must be a nonnegative integer".into())
            })?;
            if pd != self.d as u64 {
                return Err(CliError::Input(format!(
                    "params.d = {pd} disagrees with top-level d = {}",
                    self.d
                )));
            }
        }
        Ok(())
    }
}

/// A correlation matrix on disk; `im` may be omitted for real matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrFile {
    pub d: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl CorrFile {
    pub fn to_correlation(&self, tol: &Tol) -> Result<CorrelationMatrix, CliError> {
        let im = self
            .im
            .clone()
            .unwrap_or_else(|| vec![vec![0.0; self.re.first().map_or(0, Vec::len)]; self.re.len()]);
        let m = MatrixJson {
            re: self.re.clone(),
            im,
        }
        .to_cmat("correlation matrix")?;
        if m.nrows() != self.d || m.ncols() != self.d {
            return Err(CliError::Input(format!(
                "correlation matrix is {}x{} but d = {}",
                m.nrows(),
                m.ncols(),
                self.d
            )));
        }
        Ok(CorrelationMatrix::new(m, tol)?)
    }
}

/// A block signature on disk: `{"blocks": [[m, n], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub blocks: Vec<(usize, usize)>,
}

/// Parse a JSON file into both its raw value (echoed in reports) and a typed
/// document.
pub fn read_json_file<T: serde::de::DeserializeOwned>(
    path: &Path,
) -> Result<(serde_json::Value, T), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: invalid JSON: {e}", path.display())))?;
    let typed: T = serde_json::from_value(raw.clone())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((raw, typed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = CMat::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64 + 0.5));
        let j = MatrixJson::from_cmat(&m);
        let back = j.to_cmat("test").unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn ragged_rows_rejected() {
        let j = MatrixJson {
            re: vec![vec![1.0, 0.0], vec![0.0]],
            im: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        assert!(j.to_cmat("test").is_err());
    }

    #[test]
    fn named_channels_build() {
        let tol = Tol::default();
        let f = ChannelFile {
            d: 3,
            kind: "named".into(),
            kraus: None,
            choi: None,
            name: Some("werner_holevo3".into()),
            params: None,
        };
        let phi = f.to_channel(&tol).unwrap();
        assert_eq!(phi.d(), 3);
        // dimension disagreement is an input error
        let bad = ChannelFile { d: 4, ..f.clone() };
        assert!(bad.to_channel(&tol).is_err());
        // params.d must match the top level
        let bad_params = ChannelFile {
            params: Some(serde_json::json!({"d": 5})),
            ..f
        };
        assert!(bad_params.to_channel(&tol).is_err());
    }

    #[test]
    fn kraus_file_round_trips_identity() {
        let tol = Tol::default();
        let id = MatrixJson::from_cmat(&CMat::identity(2, 2));
        let f = ChannelFile {
            d: 2,
            kind: "kraus".into(),
            kraus: Some(vec![id]),
            choi: None,
            name: None,
            params: None,
        };
        let phi = f.to_channel(&tol).unwrap();
        assert!(phi.is_unital(&tol) && phi.is_trace_preserving(&tol));
    }

    #[test]
    fn corr_file_defaults_imaginary_part_to_zero() {
        let tol = Tol::default();
        let f = CorrFile {
            d: 2,
            re: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            im: None,
        };
        let c = f.to_correlation(&tol).unwrap();
        assert_eq!(c.d(), 2);
    }
}
