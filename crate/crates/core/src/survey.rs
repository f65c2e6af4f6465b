//! Survey response summaries and sample-size planning.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::AnalysisConfig;
use crate::error::{Error, Result};

/// One respondent's answers about one attribute of one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub respondent_id: String,
    pub plan_id: String,
    pub attribute_id: String,
    /// Maximum monthly cost the respondent would accept.
    pub max_cost: f64,
    pub utilization: f64,
    /// Minimum acceptable operational lifespan, in years (infrastructure only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifespan: Option<f64>,
    /// Source line in the CSV file, when loaded from one.
    #[serde(skip)]
    pub line: Option<u64>,
}

impl ResponseRecord {
    pub fn new(
        respondent_id: impl Into<String>,
        plan_id: impl Into<String>,
        attribute_id: impl Into<String>,
        max_cost: f64,
        utilization: f64,
    ) -> Self {
        Self {
            respondent_id: respondent_id.into(),
            plan_id: plan_id.into(),
            attribute_id: attribute_id.into(),
            max_cost,
            utilization,
            lifespan: None,
            line: None,
        }
    }

    pub fn with_lifespan(mut self, lifespan: f64) -> Self {
        self.lifespan = Some(lifespan);
        self
    }

    /// Range problems with this record, as `(field, reason)` pairs.
    pub fn range_problems(&self, config: &AnalysisConfig) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(0.0..=config.max_possible_cost).contains(&self.max_cost) {
            out.push((
                "max_cost",
                format!(
                    "{} outside [0, {}]",
                    self.max_cost, config.max_possible_cost
                ),
            ));
        }
        if !(config.lower..=config.upper).contains(&self.utilization) {
            out.push((
                "utilization",
                format!(
                    "{} outside [{}, {}]",
                    self.utilization, config.lower, config.upper
                ),
            ));
        }
        if let Some(life) = self.lifespan {
            let cap = config.max_possible_lifespan.unwrap_or(f64::INFINITY);
            if !(life >= 0.0 && life <= cap) {
                out.push(("lifespan", format!("{life} outside [0, {cap}]")));
            }
        }
        out
    }

    fn describe(&self, index: usize) -> String {
        format!(
            "row {} (respondent `{}`)",
            self.line.unwrap_or(index as u64 + 2),
            self.respondent_id
        )
    }
}

/// Moments of the responses for one (plan, attribute).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeMeasurement {
    pub mean_max_cost: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub stdev_max_cost: f64,
    pub mean_utilization: f64,
    pub stdev_utilization: f64,
    pub count: u64,
}

impl AttributeMeasurement {
    /// A measurement with zero spread, for deterministic analyses.
    pub fn exact(mean_max_cost: f64, mean_utilization: f64) -> Self {
        Self {
            mean_max_cost,
            stdev_max_cost: 0.0,
            mean_utilization,
            stdev_utilization: 0.0,
            count: 1,
        }
    }
}

/// Arithmetic mean and sample standard deviation. Values are sorted first so
/// the result does not depend on input order.
pub(crate) fn moments(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Records for `(plan_id, attribute_id)`, each range-checked.
pub(crate) fn matching<'a>(
    records: &'a [ResponseRecord],
    plan_id: &str,
    attribute_id: &str,
    config: &AnalysisConfig,
) -> Result<Vec<&'a ResponseRecord>> {
    let rows: Vec<_> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.plan_id == plan_id && r.attribute_id == attribute_id)
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset {
            plan_id: plan_id.to_string(),
            attribute_id: attribute_id.to_string(),
        });
    }
    for (i, r) in &rows {
        if let Some((field, reason)) = r.range_problems(config).into_iter().next() {
            return Err(Error::validation(format!(
                "{}: {field} {reason}",
                r.describe(*i)
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// Mean and sample standard deviation of max cost and utilization over the
/// records matching `(plan_id, attribute_id)`.
pub fn summarize(
    records: &[ResponseRecord],
    plan_id: &str,
    attribute_id: &str,
    config: &AnalysisConfig,
) -> Result<AttributeMeasurement> {
    let rows = matching(records, plan_id, attribute_id, config)?;
    let mut cost: Vec<f64> = rows.iter().map(|r| r.max_cost).collect();
    let mut util: Vec<f64> = rows.iter().map(|r| r.utilization).collect();
    let (mean_max_cost, stdev_max_cost) = moments(&mut cost);
    let (mean_utilization, stdev_utilization) = moments(&mut util);
    Ok(AttributeMeasurement {
        mean_max_cost,
        stdev_max_cost,
        mean_utilization,
        stdev_utilization,
        count: rows.len() as u64,
    })
}

/// Keyed collection of measurements, one per `(plan_id, attribute_id)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    entries: BTreeMap<String, BTreeMap<String, AttributeMeasurement>>,
}

impl MeasurementSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, plan_id: &str, attribute_id: &str, m: AttributeMeasurement) {
        self.entries
            .entry(plan_id.to_string())
            .or_default()
            .insert(attribute_id.to_string(), m);
    }

    pub fn with(mut self, plan_id: &str, attribute_id: &str, m: AttributeMeasurement) -> Self {
        self.insert(plan_id, attribute_id, m);
        self
    }

    pub fn get(&self, plan_id: &str, attribute_id: &str) -> Result<&AttributeMeasurement> {
        self.entries
            .get(plan_id)
            .and_then(|m| m.get(attribute_id))
            .ok_or_else(|| Error::EmptyDataset {
                plan_id: plan_id.to_string(),
                attribute_id: attribute_id.to_string(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &AttributeMeasurement)> {
        self.entries.iter().flat_map(|(p, attrs)| {
            attrs.iter().map(move |(a, m)| (p.as_str(), a.as_str(), m))
        })
    }

    /// Summarizes every `(plan, attribute)` present in `records`.
    pub fn from_records(records: &[ResponseRecord], config: &AnalysisConfig) -> Result<Self> {
        let mut set = Self::new();
        for (plan, attr) in distinct_keys(records) {
            set.insert(&plan, &attr, summarize(records, &plan, &attr, config)?);
        }
        Ok(set)
    }
}

fn distinct_keys(records: &[ResponseRecord]) -> Vec<(String, String)> {
    let mut keys: Vec<(String, String)> = records
        .iter()
        .map(|r| (r.plan_id.clone(), r.attribute_id.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    keys
}

/// Two-sided Student-t quantile for `confidence` with `df` degrees of freedom.
pub fn student_t_two_sided(confidence: f64, df: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain(format!("confidence {confidence} outside (0, 1)")));
    }
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::domain(format!("student t with {df} degrees of freedom: {e}")))?;
    Ok(t.inverse_cdf(0.5 + 0.5 * confidence))
}

/// Smallest sample giving a confidence interval of total width `w`:
/// `N = ceil(4·(t·s/w)²)` with `pilot_n - 1` degrees of freedom.
pub fn required_sample_size(s: f64, w: f64, confidence: f64, pilot_n: u64) -> Result<u64> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::domain(format!("standard deviation {s} must be >= 0")));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::domain(format!("interval width {w} must be > 0")));
    }
    if pilot_n < 2 {
        return Err(Error::domain(format!("pilot sample size {pilot_n} must be >= 2")));
    }
    let t = student_t_two_sided(confidence, (pilot_n - 1) as f64)?;
    let n = 4.0 * (t * s / w).powi(2);
    // guard against values a hair above an integer from rounding in t
    Ok((n - 1e-9).ceil().max(0.0) as u64)
}

/// Required sample sizes for the two standard survey measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRequirements {
    pub max_cost: u64,
    pub utilization: u64,
}

impl SampleRequirements {
    /// Standard deviations are estimated as one sixth of each answer range.
    pub fn from_config(config: &AnalysisConfig) -> Result<Self> {
        Ok(Self {
            max_cost: required_sample_size(
                config.survey_cost_range / 6.0,
                config.cost_interval_width,
                config.sample_confidence,
                config.pilot_n,
            )?,
            utilization: required_sample_size(
                config.domain_width() / 6.0,
                config.utilization_interval_width,
                config.sample_confidence,
                config.pilot_n,
            )?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    OutOfRange {
        row: u64,
        respondent_id: String,
        field: String,
        reason: String,
    },
    Duplicate {
        row: u64,
        first_row: u64,
        respondent_id: String,
        plan_id: String,
        attribute_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndersampleWarning {
    pub plan_id: String,
    pub attribute_id: String,
    pub measurement: String,
    pub count: u64,
    pub required: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeCount {
    pub plan_id: String,
    pub attribute_id: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub warnings: Vec<UndersampleWarning>,
    pub counts: Vec<AttributeCount>,
    pub required: SampleRequirements,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Range, duplicate and sample-size review of a response set. Never fails on
/// bad data; everything is reported.
pub fn validate_responses(
    records: &[ResponseRecord],
    config: &AnalysisConfig,
) -> Result<ValidationReport> {
    let required = SampleRequirements::from_config(config)?;
    let mut issues = Vec::new();
    let mut seen: HashMap<(&str, &str, &str), u64> = HashMap::new();
    let mut counts: BTreeMap<(&str, &str), u64> = BTreeMap::new();

    for (i, r) in records.iter().enumerate() {
        let row = r.line.unwrap_or(i as u64 + 2);
        for (field, reason) in r.range_problems(config) {
            issues.push(ValidationIssue::OutOfRange {
                row,
                respondent_id: r.respondent_id.clone(),
                field: field.to_string(),
                reason,
            });
        }
        let key = (
            r.respondent_id.as_str(),
            r.plan_id.as_str(),
            r.attribute_id.as_str(),
        );
        if let Some(&first_row) = seen.get(&key) {
            issues.push(ValidationIssue::Duplicate {
                row,
                first_row,
                respondent_id: r.respondent_id.clone(),
                plan_id: r.plan_id.clone(),
                attribute_id: r.attribute_id.clone(),
            });
        } else {
            seen.insert(key, row);
        }
        *counts
            .entry((r.plan_id.as_str(), r.attribute_id.as_str()))
            .or_default() += 1;
    }

    let mut warnings = Vec::new();
    for (&(plan, attr), &count) in &counts {
        for (measurement, need) in [
            ("max_cost", required.max_cost),
            ("utilization", required.utilization),
        ] {
            if count < need {
                warnings.push(UndersampleWarning {
                    plan_id: plan.to_string(),
                    attribute_id: attr.to_string(),
                    measurement: measurement.to_string(),
                    count,
                    required: need,
                });
            }
        }
    }

    Ok(ValidationReport {
        issues,
        warnings,
        counts: counts
            .into_iter()
            .map(|((p, a), count)| AttributeCount {
                plan_id: p.to_string(),
                attribute_id: a.to_string(),
                count,
            })
            .collect(),
        required,
    })
}
