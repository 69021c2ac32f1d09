//! JSON detection reports.
//!
//! Curve indices in a report are 1-based. Non-finite diagnostics are written
//! as the strings "Infinity", "-Infinity" and "NaN" so that every report is
//! valid JSON and reads back bit-for-bit.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// An f64 that survives JSON even when it is not finite.
#[derive(Debug, Clone, Copy)]
pub struct JsonFloat(pub f64);

impl PartialEq for JsonFloat {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits() || (self.0.is_nan() && other.0.is_nan())
    }
}

impl Serialize for JsonFloat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("NaN")
        } else if x > 0.0 {
            s.serialize_str("Infinity")
        } else {
            s.serialize_str("-Infinity")
        }
    }
}

impl<'de> Deserialize<'de> for JsonFloat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = JsonFloat;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"Infinity\", \"-Infinity\" or \"NaN\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<JsonFloat, E> {
                Ok(JsonFloat(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<JsonFloat, E> {
                Ok(JsonFloat(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<JsonFloat, E> {
                Ok(JsonFloat(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<JsonFloat, E> {
                match v {
                    "Infinity" => Ok(JsonFloat(f64::INFINITY)),
                    "-Infinity" => Ok(JsonFloat(f64::NEG_INFINITY)),
                    "NaN" => Ok(JsonFloat(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Diagnostic {
    Vector(Vec<JsonFloat>),
    Matrix(Vec<Vec<JsonFloat>>),
}

impl Diagnostic {
    pub fn vector(xs: &[f64]) -> Self {
        Diagnostic::Vector(xs.iter().copied().map(JsonFloat).collect())
    }

    pub fn matrix(rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        Diagnostic::Matrix(
            rows.into_iter()
                .map(|r| r.into_iter().map(JsonFloat).collect())
                .collect(),
        )
    }

    /// The values of a vector, or the first column of a matrix.
    pub fn as_vector(&self) -> Vec<f64> {
        match self {
            Diagnostic::Vector(v) => v.iter().map(|x| x.0).collect(),
            Diagnostic::Matrix(m) => m.iter().map(|r| r.first().map_or(f64::NAN, |x| x.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Diagnostic::Vector(v) => v.len(),
            Diagnostic::Matrix(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub label: String,
    pub stage: String,
    /// Curves flagged at this stage.
    pub outliers: Vec<usize>,
    /// Curves flagged here but not at the previous stage.
    pub new_outliers: Vec<usize>,
    /// Transformed curves, present with `--save-data`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<Vec<JsonFloat>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportError {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub schema_version: u32,
    pub method: String,
    pub parameters: BTreeMap<String, Value>,
    /// Zero when the input could not be read.
    pub n: usize,
    pub p: usize,
    pub d: usize,
    /// 1-based indices per class; "all" is the union.
    pub outliers: BTreeMap<String, Vec<usize>>,
    pub diagnostics: BTreeMap<String, Diagnostic>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageReport>,
    #[serde(default)]
    pub cutoff: Option<JsonFloat>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub error: Option<ReportError>,
}

impl DetectionReport {
    pub fn new(method: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method: method.to_string(),
            parameters: BTreeMap::new(),
            n: 0,
            p: 0,
            d: 0,
            outliers: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            stages: Vec::new(),
            cutoff: None,
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn failed(method: &str, err: &CliError) -> Self {
        let mut r = Self::new(method);
        r.error = Some(ReportError {
            kind: err.kind().to_string(),
            message: err.to_string(),
        });
        r
    }

    /// Stores 0-based indices under `class` as 1-based.
    pub fn set_outliers(&mut self, class: &str, zero_based: &[usize]) {
        let mut v: Vec<usize> = zero_based.iter().map(|i| i + 1).collect();
        v.sort_unstable();
        v.dedup();
        self.outliers.insert(class.to_string(), v);
    }

    /// 0-based indices of `class`.
    pub fn outliers_zero_based(&self, class: &str) -> Option<Vec<usize>> {
        self.outliers
            .get(class)
            .map(|v| v.iter().map(|i| i.saturating_sub(1)).collect())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &std::path::Path) -> CliResult<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| CliError::Json {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(CliError::Json {
                path: origin.to_path_buf(),
                message: format!("unsupported schema_version {}", r.schema_version),
            });
        }
        Ok(r)
    }
}
