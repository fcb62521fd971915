//! Versioned JSON documents: case inputs, reports and the pair/model
//! snapshots embedded in certificates.
//!
//! Rationals are written as `"p/q"` strings, boundaries and certificates are
//! keyed by divisor label, and every map is ordered so emission is
//! byte-deterministic.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bigness::BignessCertificate;
use crate::divisor::{DivisorId, QDivisor};
use crate::error::{Error, Result};
use crate::model::{LogPair, SurfaceModel, TrackedDivisor};
use crate::morphism::Step;
use crate::pipeline::{BoundCertificate, BoundInputs};
use crate::programs::{MmpOutcome, MmpStep};
use crate::rational::Rational;
use crate::singularity::SingularityReport;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisorDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub divisors: Vec<DivisorDoc>,
    pub intersection: Vec<Vec<Rational>>,
    pub canonical: Vec<Rational>,
    #[serde(default = "default_true")]
    pub smooth: bool,
}

fn default_true() -> bool {
    true
}

impl ModelDoc {
    pub fn from_model(model: &SurfaceModel) -> Self {
        ModelDoc {
            divisors: model
                .ids()
                .iter()
                .zip(model.labels())
                .map(|(id, label)| DivisorDoc {
                    id: Some(id.0),
                    label: label.clone(),
                })
                .collect(),
            intersection: model.form_rows().to_vec(),
            canonical: model.canonical_vector().to_vec(),
            smooth: model.is_smooth(),
        }
    }

    /// Validate and build the model; errors carry a field path below `path`.
    pub fn to_model(&self, path: &str) -> Result<SurfaceModel> {
        let n = self.divisors.len();
        let explicit = self.divisors.iter().filter(|d| d.id.is_some()).count();
        if explicit != 0 && explicit != n {
            return Err(Error::parse(format!("{path}.divisors"), "give an id for every divisor or for none"));
        }
        if self.canonical.len() != n {
            return Err(Error::parse(
                format!("{path}.canonical"),
                format!("expected {n} entries, found {}", self.canonical.len()),
            ));
        }
        if self.intersection.len() != n {
            return Err(Error::parse(
                format!("{path}.intersection"),
                format!("expected {n} rows, found {}", self.intersection.len()),
            ));
        }
        for (i, row) in self.intersection.iter().enumerate() {
            if row.len() != n {
                return Err(Error::parse(
                    format!("{path}.intersection[{i}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if self.intersection[i][j] != self.intersection[j][i] {
                    return Err(Error::parse(
                        format!("{path}.intersection[{i}][{j}]"),
                        format!(
                            "matrix is not symmetric: {} vs {}",
                            self.intersection[i][j], self.intersection[j][i]
                        ),
                    ));
                }
            }
        }
        let divisors = self
            .divisors
            .iter()
            .zip(&self.canonical)
            .enumerate()
            .map(|(i, (d, k))| TrackedDivisor {
                id: DivisorId(d.id.unwrap_or(i as u32)),
                label: d.label.clone(),
                canonical_degree: k.clone(),
            })
            .collect();
        SurfaceModel::new(divisors, self.intersection.clone())
            .map(|m| m.with_smooth(self.smooth))
            .map_err(|e| Error::parse(path, strip_domain(e)))
    }
}

fn strip_domain(e: Error) -> String {
    match e {
        Error::Domain(m) => m,
        other => other.to_string(),
    }
}

fn labelled(model: &SurfaceModel, d: &QDivisor) -> BTreeMap<String, Rational> {
    d.iter().map(|(id, c)| (model.label(id).to_string(), c.clone())).collect()
}

fn unlabelled(model: &SurfaceModel, map: &BTreeMap<String, Rational>, path: &str) -> Result<QDivisor> {
    map.iter()
        .map(|(label, c)| {
            model
                .id_of_label(label)
                .map(|id| (id, c.clone()))
                .ok_or_else(|| Error::parse(format!("{path}.{label}"), "unknown divisor label"))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub model: ModelDoc,
    pub boundary: BTreeMap<String, Rational>,
}

impl PairDoc {
    pub fn from_pair(pair: &LogPair) -> Self {
        PairDoc {
            model: ModelDoc::from_model(pair.model()),
            boundary: labelled(pair.model(), pair.boundary()),
        }
    }

    /// The pair, allowing sub-boundaries; callers that need a boundary check
    /// it themselves.
    pub fn to_pair(&self, path: &str) -> Result<LogPair> {
        let model = self.model.to_model(&format!("{path}.model"))?;
        let boundary = unlabelled(&model, &self.boundary, &format!("{path}.boundary"))?;
        LogPair::sub_boundary(model, boundary)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub nef_part: BTreeMap<String, Rational>,
    #[serde(default)]
    pub effective_part: BTreeMap<String, Rational>,
}

impl CertificateDoc {
    pub fn from_certificate(model: &SurfaceModel, cert: &BignessCertificate) -> Self {
        CertificateDoc {
            nef_part: labelled(model, &cert.nef_part),
            effective_part: labelled(model, &cert.effective_part),
        }
    }

    pub fn to_certificate(&self, model: &SurfaceModel, path: &str) -> Result<BignessCertificate> {
        Ok(BignessCertificate::new(
            unlabelled(model, &self.nef_part, &format!("{path}.nef_part"))?,
            unlabelled(model, &self.effective_part, &format!("{path}.effective_part"))?,
        ))
    }
}

/// Input document for every command that works on a pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDocument {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelDoc,
    #[serde(default)]
    pub boundary: BTreeMap<String, Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<BoundInputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bigness_certificate: Option<CertificateDoc>,
}

/// A parsed and validated case.
#[derive(Clone, Debug)]
pub struct Case {
    pub name: Option<String>,
    pub pair: LogPair,
    pub inputs: Option<BoundInputs>,
    pub certificate: Option<BignessCertificate>,
}

impl CaseDocument {
    pub fn from_case(case: &Case) -> Self {
        let model = case.pair.model();
        CaseDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            name: case.name.clone(),
            model: ModelDoc::from_model(model),
            boundary: labelled(model, case.pair.boundary()),
            inputs: case.inputs.clone(),
            bigness_certificate: case
                .certificate
                .as_ref()
                .map(|c| CertificateDoc::from_certificate(model, c)),
        }
    }

    pub fn into_case(self) -> Result<Case> {
        let model = self.model.to_model("model")?;
        let boundary = unlabelled(&model, &self.boundary, "boundary")?;
        let certificate = self
            .bigness_certificate
            .as_ref()
            .map(|c| c.to_certificate(&model, "bigness_certificate"))
            .transpose()?;
        if let Some(inputs) = &self.inputs {
            inputs.validate().map_err(|e| Error::parse("inputs", strip_domain(e)))?;
        }
        Ok(Case {
            name: self.name,
            pair: LogPair::sub_boundary(model, boundary)?,
            inputs: self.inputs,
            certificate,
        })
    }
}

/// Parse any versioned document, reporting the JSON path of the first
/// offending field.
pub fn parse_document<T: DeserializeOwned>(text: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    match value.get("schema_version") {
        None => return Err(Error::parse("schema_version", "missing field")),
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(serde_json::Value::String(v)) => return Err(Error::Version(v.clone())),
        Some(other) => return Err(Error::Version(other.to_string())),
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(path, e.into_inner().to_string())
    })
}

pub fn parse_case(text: &str) -> Result<Case> {
    parse_document::<CaseDocument>(text)?.into_case()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalizationSummary {
    pub steps: Vec<Step>,
    pub output: PairDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmpSummary {
    pub steps: Vec<MmpStep>,
    pub outcome: MmpOutcome,
    pub negative_discrepancy_count: usize,
    pub final_pair: PairDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemigroupEntry {
    pub n: u64,
    pub m: u64,
    pub decomposition: crate::bounds::Decomposition,
}

/// Result of one brute-force cross-check suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSuite {
    pub suite: String,
    pub cases: usize,
    pub mismatches: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Output of every command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singularity: Option<SingularityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminalization: Option<TerminalizationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmp: Option<MmpSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semigroup: Option<Vec<SemigroupEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Vec<OracleSuite>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<BoundCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            case: None,
            log: Vec::new(),
            singularity: None,
            terminalization: None,
            mmp: None,
            semigroup: None,
            oracle: None,
            certificate: None,
            timing: None,
        }
    }
}
