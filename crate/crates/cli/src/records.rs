//! Certification run records, one JSON object per line.
//!
//! Field names are fixed: `path`, `len`, `pred`, `abstain`, `mu_hat`,
//! `mu_lcb`, `radius` (object keyed by canonical op-set label, values an
//! integer, `"unbounded"`, or `null`), `ncr_pct`, `seed`. Rows that failed
//! to process carry an additional `error` field.

use std::collections::BTreeMap;

use editcert_core::certify::{CertifiedVerdict, Radius};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A certified radius as it appears in the JSON records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusValue {
    Finite(u64),
    Unbounded,
    NotCertifiable,
}

impl From<Radius> for RadiusValue {
    fn from(r: Radius) -> Self {
        match r {
            Radius::Finite(v) => RadiusValue::Finite(v),
            Radius::Unbounded => RadiusValue::Unbounded,
            Radius::NotCertifiable => RadiusValue::NotCertifiable,
        }
    }
}

impl RadiusValue {
    pub fn covers(self, r: u64) -> bool {
        match self {
            RadiusValue::Finite(max) => r <= max,
            RadiusValue::Unbounded => true,
            RadiusValue::NotCertifiable => false,
        }
    }

    /// Ordering key: not-certifiable below every finite radius, unbounded
    /// above.
    pub fn rank(self) -> i128 {
        match self {
            RadiusValue::NotCertifiable => -1,
            RadiusValue::Finite(v) => v as i128,
            RadiusValue::Unbounded => i128::MAX,
        }
    }
}

impl Serialize for RadiusValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            RadiusValue::Finite(v) => serializer.serialize_u64(*v),
            RadiusValue::Unbounded => serializer.serialize_str("unbounded"),
            RadiusValue::NotCertifiable => serializer.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for RadiusValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::Null => Ok(RadiusValue::NotCertifiable),
            serde_json::Value::String(s) if s == "unbounded" => Ok(RadiusValue::Unbounded),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(RadiusValue::Finite)
                .ok_or_else(|| D::Error::custom("radius must be a nonnegative integer")),
            other => Err(D::Error::custom(format!("bad radius value {other}"))),
        }
    }
}

/// One certification outcome.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub path: String,
    pub len: usize,
    pub pred: Option<usize>,
    pub abstain: bool,
    pub mu_hat: Option<f64>,
    pub mu_lcb: Option<f64>,
    pub radius: BTreeMap<String, RadiusValue>,
    pub ncr_pct: Option<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    /// Builds a record from a verdict; `ncr_pct` is computed from the first
    /// requested op set.
    pub fn from_verdict(path: &str, len: usize, verdict: &CertifiedVerdict) -> Self {
        let radius: BTreeMap<String, RadiusValue> = verdict
            .radii
            .iter()
            .map(|(ops, r)| (ops.label(), RadiusValue::from(*r)))
            .collect();
        let ncr_pct = verdict.radii.first().and_then(|(_, r)| match r {
            Radius::Finite(v) if len > 0 => Some(100.0 * *v as f64 / len as f64),
            _ => None,
        });
        RunRecord {
            path: path.to_string(),
            len,
            pred: verdict.prediction,
            abstain: verdict.prediction.is_none(),
            mu_hat: Some(verdict.mu_hat),
            mu_lcb: Some(verdict.mu_lcb),
            radius,
            ncr_pct,
            seed: verdict.master_seed,
            error: None,
        }
    }

    pub fn from_error(path: &str, seed: u64, message: String) -> Self {
        RunRecord {
            path: path.to_string(),
            len: 0,
            pred: None,
            abstain: true,
            mu_hat: None,
            mu_lcb: None,
            radius: BTreeMap::new(),
            ncr_pct: None,
            seed,
            error: Some(message),
        }
    }
}

impl RunRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

pub fn parse_records(text: &str) -> Result<Vec<RunRecord>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| serde_json::from_str(line).map_err(|e| format!("bad record line: {e}")))
        .collect()
}
