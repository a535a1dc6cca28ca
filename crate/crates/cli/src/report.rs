//! JSON report files.

use std::collections::BTreeMap;

use becr_core::dispersion::DispersionReport;
use becr_core::Error as CoreError;
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Inputs that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: String,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub tool_version: String,
}

/// Serialized form of a dispersion report.
///
/// A metric that is undefined for the data is `null`, and `undefined`
/// maps its name to the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub gini_index: Option<f64>,
    pub top_m_eigenvalue_ratio: Option<f64>,
    pub f_test: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub n_samples: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undefined: BTreeMap<String, String>,
    pub provenance: Provenance,
}

impl ReportFile {
    pub fn from_report(report: &DispersionReport, input: impl Into<String>, seed: u64) -> Self {
        let mut undefined = BTreeMap::new();
        let mut take = |name: &str, value: &Result<f64, CoreError>| match value {
            Ok(v) if v.is_finite() => Some(*v),
            Ok(_) => {
                undefined.insert(
                    name.to_string(),
                    "within-cluster scatter is zero; the statistic is unbounded".to_string(),
                );
                None
            }
            Err(e) => {
                undefined.insert(name.to_string(), e.to_string());
                None
            }
        };
        let gini_index = take("gini_index", &report.gini_index);
        let top_m_eigenvalue_ratio = take("top_m_eigenvalue_ratio", &report.top_m_eigenvalue_ratio);
        let f_test = take("f_test", &report.f_test);
        let calinski_harabasz = take("calinski_harabasz", &report.calinski_harabasz);
        Self {
            gini_index,
            top_m_eigenvalue_ratio,
            f_test,
            calinski_harabasz,
            n_samples: report.n_samples,
            dim: report.dim,
            undefined,
            provenance: Provenance {
                input: input.into(),
                k: report.k,
                m: report.m,
                seed,
                tool_version: TOOL_VERSION.to_string(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Output of the `becr` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BecrSummary {
    pub gini: f64,
    pub penalty: f64,
    pub total_loss: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub vanilla_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_check_max_rel_error: Option<f64>,
}
