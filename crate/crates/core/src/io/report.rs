use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{MonteCarloResult, ProbabilitySweep};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::infra::{InfraComparison, InfraMeasurement};
use crate::plan::{GoNoGoResult, PlanEvaluation};
use crate::survey::{SampleRequirements, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Rank,
    GoNoGo,
    Sweep,
    MonteCarlo,
    Infra,
    SampleSize,
}

impl ReportKind {
    pub const ALL: [ReportKind; 6] = [
        ReportKind::Rank,
        ReportKind::GoNoGo,
        ReportKind::Sweep,
        ReportKind::MonteCarlo,
        ReportKind::Infra,
        ReportKind::SampleSize,
    ];

    /// Lower-case name used by the CLI subcommands and API routes.
    pub fn slug(self) -> &'static str {
        match self {
            ReportKind::Rank => "rank",
            ReportKind::GoNoGo => "gonogo",
            ReportKind::Sweep => "sweep",
            ReportKind::MonteCarlo => "montecarlo",
            ReportKind::Infra => "infra",
            ReportKind::SampleSize => "samplesize",
        }
    }

    pub fn from_slug(slug: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.slug() == slug)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankPayload {
    /// Best first.
    pub ranking: Vec<PlanEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloPayload {
    pub plan_a: String,
    pub plan_b: String,
    /// True when plan B is plan A's synthetic status-quo twin.
    pub against_status_quo: bool,
    pub result: MonteCarloResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraPayload {
    pub plan_id: String,
    pub attribute_id: String,
    pub measurement: InfraMeasurement,
    pub comparison: InfraComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizePayload {
    pub required: SampleRequirements,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ReportPayload {
    Rank(RankPayload),
    GoNoGo(GoNoGoResult),
    Sweep(ProbabilitySweep),
    MonteCarlo(MonteCarloPayload),
    Infra(InfraPayload),
    SampleSize(SampleSizePayload),
}

impl ReportPayload {
    pub fn kind(&self) -> ReportKind {
        match self {
            ReportPayload::Rank(_) => ReportKind::Rank,
            ReportPayload::GoNoGo(_) => ReportKind::GoNoGo,
            ReportPayload::Sweep(_) => ReportKind::Sweep,
            ReportPayload::MonteCarlo(_) => ReportKind::MonteCarlo,
            ReportPayload::Infra(_) => ReportKind::Infra,
            ReportPayload::SampleSize(_) => ReportKind::SampleSize,
        }
    }

    fn from_value(kind: ReportKind, v: serde_json::Value) -> serde_json::Result<Self> {
        Ok(match kind {
            ReportKind::Rank => ReportPayload::Rank(serde_json::from_value(v)?),
            ReportKind::GoNoGo => ReportPayload::GoNoGo(serde_json::from_value(v)?),
            ReportKind::Sweep => ReportPayload::Sweep(serde_json::from_value(v)?),
            ReportKind::MonteCarlo => ReportPayload::MonteCarlo(serde_json::from_value(v)?),
            ReportKind::Infra => ReportPayload::Infra(serde_json::from_value(v)?),
            ReportKind::SampleSize => ReportPayload::SampleSize(serde_json::from_value(v)?),
        })
    }
}

/// A finished analysis: what was computed, from which inputs, and how it
/// reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReport")]
pub struct DecisionReport {
    pub kind: ReportKind,
    pub inputs_digest: String,
    pub config: AnalysisConfig,
    pub payload: ReportPayload,
    pub human_log: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    kind: ReportKind,
    inputs_digest: String,
    config: AnalysisConfig,
    payload: serde_json::Value,
    human_log: String,
}

impl TryFrom<RawReport> for DecisionReport {
    type Error = String;

    fn try_from(raw: RawReport) -> std::result::Result<Self, String> {
        let payload = ReportPayload::from_value(raw.kind, raw.payload).map_err(|e| e.to_string())?;
        Ok(DecisionReport {
            kind: raw.kind,
            inputs_digest: raw.inputs_digest,
            config: raw.config,
            payload,
            human_log: raw.human_log,
        })
    }
}

impl DecisionReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        crate::io::plan_file::from_json_with_path(json)
    }
}

/// SHA-256 over labeled, length-prefixed input parts, so no two different
/// part sequences share a preimage.
#[derive(Debug, Clone)]
pub struct InputsDigest(Sha256);

impl InputsDigest {
    pub fn new(kind: ReportKind) -> Self {
        let mut d = Self(Sha256::new());
        d.part("kind", kind.slug().as_bytes());
        d
    }

    pub fn part(&mut self, label: &str, bytes: &[u8]) -> &mut Self {
        for chunk in [label.as_bytes(), bytes] {
            self.0.update((chunk.len() as u64).to_le_bytes());
            self.0.update(chunk);
        }
        self
    }

    pub fn json_part<T: Serialize>(&mut self, label: &str, value: &T) -> Result<&mut Self> {
        let bytes = serde_json::to_vec(value).map_err(|e| Error::Internal(e.to_string()))?;
        Ok(self.part(label, &bytes))
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

/// Hex SHA-256 of raw bytes, used as a dataset id.
pub fn content_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
