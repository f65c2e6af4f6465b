//! One entry point for every analysis, shared by the CLI, HTTP API and C
//! bindings so they produce identical reports.

use serde::{Deserialize, Serialize};

use crate::analysis::{monte_carlo_compare, probability_sweep, MonteCarloOptions};
use crate::config::{AnalysisConfig, ConfigOverrides};
use crate::error::{Error, Result};
use crate::infra::{infra_scenario_compare, summarize_infra};
use crate::io::report::{
    InfraPayload, MonteCarloPayload, RankPayload, SampleSizePayload,
};
use crate::io::{content_digest, parse_survey_csv, text, DecisionReport, InputsDigest, PlanFile, ReportKind, ReportPayload};
use crate::plan::{go_no_go, nominal_quality_curve, plan_probabilities, rank_plans, PlanSpec};
use crate::survey::{
    validate_responses, AttributeMeasurement, MeasurementSet, ResponseRecord, SampleRequirements,
    ValidationIssue, ValidationReport,
};

/// Parsed survey responses with a content-derived id.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    pub records: Vec<ResponseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSummary {
    pub plan_id: String,
    pub attribute_id: String,
    pub measurement: AttributeMeasurement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub record_count: usize,
    pub attributes: Vec<AttributeSummary>,
    pub validation: ValidationReport,
}

fn describe_issue(issue: &ValidationIssue) -> String {
    match issue {
        ValidationIssue::OutOfRange {
            row,
            respondent_id,
            field,
            reason,
        } => format!("row {row} (respondent `{respondent_id}`): {field} {reason}"),
        ValidationIssue::Duplicate {
            row,
            first_row,
            respondent_id,
            plan_id,
            attribute_id,
        } => format!(
            "row {row}: respondent `{respondent_id}` already answered plan `{plan_id}`, attribute `{attribute_id}` on row {first_row}"
        ),
    }
}

impl Dataset {
    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        Ok(Self {
            id: content_digest(bytes),
            records: parse_survey_csv(bytes)?,
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_bytes(&bytes)
    }

    /// Validation report, failing on the first range or duplicate issues.
    pub fn validate(&self, config: &AnalysisConfig) -> Result<ValidationReport> {
        let report = validate_responses(&self.records, config)?;
        if !report.is_clean() {
            let shown: Vec<String> = report.issues.iter().take(5).map(describe_issue).collect();
            let more = report.issues.len().saturating_sub(shown.len());
            let tail = if more > 0 { format!("; and {more} more") } else { String::new() };
            return Err(Error::validation(format!("{}{tail}", shown.join("; "))));
        }
        Ok(report)
    }

    pub fn measurements(&self, config: &AnalysisConfig) -> Result<MeasurementSet> {
        self.validate(config)?;
        MeasurementSet::from_records(&self.records, config)
    }

    pub fn summary(&self, config: &AnalysisConfig) -> Result<DatasetSummary> {
        let validation = self.validate(config)?;
        let set = MeasurementSet::from_records(&self.records, config)?;
        Ok(DatasetSummary {
            dataset_id: self.id.clone(),
            record_count: self.records.len(),
            attributes: set
                .iter()
                .map(|(p, a, m)| AttributeSummary {
                    plan_id: p.to_string(),
                    attribute_id: a.to_string(),
                    measurement: *m,
                })
                .collect(),
            validation,
        })
    }
}

/// Per-request choices that are not global constants.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Plan for go/no-go, or plan A for Monte Carlo; defaults to the first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan_id: Option<String>,
    /// Plan B for Monte Carlo; defaults to the second plan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan_b: Option<String>,
    /// Simulate against plan A's status-quo twin instead of plan B.
    pub against_status_quo: bool,
    /// Monte Carlo draws; defaults to the household count. For
    /// infrastructure analyses, setting it turns simulation on.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<u64>,
    /// Worker threads for simulation; results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

/// Everything an analysis reads, besides the survey data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisRequest {
    pub plans: PlanFile,
    /// Config file layer, below the plan file's own `config` section.
    pub base: ConfigOverrides,
    /// Command-line or request overrides, above everything else.
    pub overrides: ConfigOverrides,
    pub options: AnalysisOptions,
}

impl AnalysisRequest {
    pub fn config(&self) -> Result<AnalysisConfig> {
        AnalysisConfig::resolve(&[&self.base, &self.plans.config, &self.overrides])
    }
}

fn need_dataset(dataset: Option<&Dataset>) -> Result<&Dataset> {
    dataset.ok_or_else(|| Error::validation("this analysis needs survey data"))
}

fn need_plans(plans: &PlanFile) -> Result<&[PlanSpec]> {
    if plans.plans.is_empty() {
        return Err(Error::validation("this analysis needs at least one plan"));
    }
    Ok(&plans.plans)
}

fn pick<'a>(plans: &'a PlanFile, id: Option<&str>, fallback: usize) -> Result<&'a PlanSpec> {
    match id {
        Some(id) => plans.plan(id),
        None => plans.plans.get(fallback).ok_or_else(|| {
            Error::validation(format!("this analysis needs at least {} plans", fallback + 1))
        }),
    }
}

/// Runs one analysis and wraps the result in a report.
pub fn run_analysis(
    kind: ReportKind,
    dataset: Option<&Dataset>,
    request: &AnalysisRequest,
) -> Result<DecisionReport> {
    let config = request.config()?;
    let plans = &request.plans;
    let payload = match kind {
        ReportKind::Rank => {
            let m = need_dataset(dataset)?.measurements(&config)?;
            ReportPayload::Rank(RankPayload {
                ranking: rank_plans(need_plans(plans)?, &m, &config)?,
            })
        }
        ReportKind::GoNoGo => {
            let m = need_dataset(dataset)?.measurements(&config)?;
            let plan = match request.options.plan_id.as_deref() {
                Some(id) => plans.plan(id)?,
                None => need_plans(plans)?
                    .iter()
                    .find(|p| !p.is_status_quo)
                    .ok_or_else(|| Error::validation("no plan other than the status quo"))?,
            };
            ReportPayload::GoNoGo(go_no_go(plan, &m, &config)?)
        }
        ReportKind::Sweep => {
            let m = need_dataset(dataset)?.measurements(&config)?;
            ReportPayload::Sweep(probability_sweep(need_plans(plans)?, &m, &config, config.sweep_increment)?)
        }
        ReportKind::MonteCarlo => {
            let m = need_dataset(dataset)?.measurements(&config)?;
            need_plans(plans)?;
            let a = pick(plans, request.options.plan_id.as_deref(), 0)?;
            let twin;
            let to_twin = request.options.against_status_quo
                || (request.options.plan_b.is_none() && plans.plans.len() == 1);
            let b = if to_twin {
                a.validate(&config)?;
                let probabilities = plan_probabilities(a, &nominal_quality_curve(&config)?, &config)?;
                twin = a.status_quo_twin(config.lower, probabilities);
                &twin
            } else {
                pick(plans, request.options.plan_b.as_deref(), 1)?
            };
            let mut opts = MonteCarloOptions::new(
                request.options.draws.unwrap_or(config.households),
                config.seed,
            );
            opts.threads = request.options.threads;
            ReportPayload::MonteCarlo(MonteCarloPayload {
                plan_a: a.plan_id.clone(),
                plan_b: b.plan_id.clone(),
                against_status_quo: to_twin,
                result: monte_carlo_compare(a, b, &m, &config, opts)?,
            })
        }
        ReportKind::Infra => {
            let section = plans
                .infrastructure
                .as_ref()
                .ok_or_else(|| Error::validation("the plan file has no `infrastructure` section"))?;
            let data = need_dataset(dataset)?;
            data.validate(&config)?;
            let measurement = summarize_infra(&data.records, &section.plan_id, &section.attribute_id, &config)?;
            let mc = request.options.draws.map(|draws| MonteCarloOptions {
                draws,
                seed: config.seed,
                threads: request.options.threads,
            });
            ReportPayload::Infra(InfraPayload {
                plan_id: section.plan_id.clone(),
                attribute_id: section.attribute_id.clone(),
                measurement,
                comparison: infra_scenario_compare(&section.scenarios(), &measurement, &config, mc)?,
            })
        }
        ReportKind::SampleSize => ReportPayload::SampleSize(SampleSizePayload {
            required: SampleRequirements::from_config(&config)?,
            validation: dataset.map(|d| d.validate(&config)).transpose()?,
        }),
    };

    let mut digest = InputsDigest::new(kind);
    digest
        .json_part("config", &config)?
        .json_part("plans", &plans.plans)?
        .json_part("infrastructure", &plans.infrastructure)?
        .json_part("options", &request.options)?
        .part("dataset", dataset.map(|d| d.id.as_bytes()).unwrap_or_default());
    Ok(DecisionReport {
        kind,
        inputs_digest: digest.finish(),
        human_log: text::render(&payload),
        config,
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_plan_file;

    const CSV: &str = "respondent_id,plan_id,attribute_id,max_cost,utilization\n\
        r1,A,x,5,2\nr2,A,x,7,3\nr3,A,x,9,4\nr1,B,x,4,2\nr2,B,x,8,3\nr3,B,x,6,2\n";
    const PLANS: &str = r#"{"plans": [
        {"plan_id": "A", "attributes": [{"attribute_id": "x", "targets": {"low": {"cost": 2, "quality": 2}, "nominal": {"cost": 3, "quality": 3}, "high": {"cost": 4, "quality": 4}}}]},
        {"plan_id": "B", "attributes": [{"attribute_id": "x", "targets": {"low": {"cost": 2.5, "quality": 2.5}, "nominal": {"cost": 3.5, "quality": 3.5}, "high": {"cost": 4.5, "quality": 4.5}}}]}
    ]}"#;

    fn request() -> AnalysisRequest {
        AnalysisRequest {
            plans: parse_plan_file(PLANS).unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn every_kind_runs_and_round_trips() {
        let data = Dataset::from_csv_bytes(CSV.as_bytes()).unwrap();
        let mut req = request();
        req.options.draws = Some(200);
        req.overrides.sweep_increment = Some(0.25);
        for kind in [ReportKind::Rank, ReportKind::GoNoGo, ReportKind::Sweep, ReportKind::MonteCarlo, ReportKind::SampleSize] {
            let r = run_analysis(kind, Some(&data), &req).unwrap();
            assert_eq!(r.kind, kind);
            assert_eq!(r.payload.kind(), kind);
            let back = DecisionReport::from_json(&r.to_json().unwrap()).unwrap();
            assert_eq!(back, r);
        }
    }

    #[test]
    fn digest_tracks_inputs() {
        let data = Dataset::from_csv_bytes(CSV.as_bytes()).unwrap();
        let a = run_analysis(ReportKind::Rank, Some(&data), &request()).unwrap();
        let b = run_analysis(ReportKind::Rank, Some(&data), &request()).unwrap();
        assert_eq!(a.inputs_digest, b.inputs_digest);
        let changed = Dataset::from_csv_bytes(CSV.replace("r3,B,x,6,2", "r3,B,x,6,3").as_bytes()).unwrap();
        let c = run_analysis(ReportKind::Rank, Some(&changed), &request()).unwrap();
        assert_ne!(a.inputs_digest, c.inputs_digest);
        let mut req = request();
        req.overrides.w_c = Some(1.0);
        let d = run_analysis(ReportKind::Rank, Some(&data), &req).unwrap();
        assert_ne!(a.inputs_digest, d.inputs_digest);
    }

    #[test]
    fn layers_apply_in_order() {
        let mut req = request();
        req.base.w_c = Some(1.5);
        assert_eq!(req.config().unwrap().w_c, 1.5);
        req.plans.config.w_c = Some(1.2);
        assert_eq!(req.config().unwrap().w_c, 1.2);
        req.overrides.w_c = Some(1.0);
        assert_eq!(req.config().unwrap().w_c, 1.0);
    }

    #[test]
    fn bad_rows_fail_validation() {
        let data = Dataset::from_csv_bytes(format!("{CSV}r1,A,x,50,2\n").as_bytes()).unwrap();
        let err = run_analysis(ReportKind::Rank, Some(&data), &request()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("row 8")), "{err}");
    }

    #[test]
    fn missing_inputs() {
        assert!(run_analysis(ReportKind::Rank, None, &request()).is_err());
        let data = Dataset::from_csv_bytes(CSV.as_bytes()).unwrap();
        assert!(run_analysis(ReportKind::Infra, Some(&data), &request()).is_err());
        let mut req = request();
        req.options.plan_id = Some("Nope".into());
        assert!(run_analysis(ReportKind::GoNoGo, Some(&data), &req).is_err());
        assert!(run_analysis(ReportKind::SampleSize, None, &request()).is_ok());
    }

    #[test]
    fn single_plan_monte_carlo_uses_twin() {
        let data = Dataset::from_csv_bytes(CSV.as_bytes()).unwrap();
        let mut req = request();
        req.plans.plans.truncate(1);
        req.options.draws = Some(50);
        let r = run_analysis(ReportKind::MonteCarlo, Some(&data), &req).unwrap();
        match r.payload {
            ReportPayload::MonteCarlo(p) => {
                assert!(p.against_status_quo);
                assert_eq!(p.plan_b, "A:status_quo");
            }
            other => panic!("{other:?}"),
        }
    }
}
