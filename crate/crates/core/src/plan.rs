//! Plans, scenario targets and the three-branch decision tree: scenario
//! probability estimation, expected plan utility, ranking and go/no-go.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::survey::{AttributeMeasurement, MeasurementSet};
use crate::utility::{
    attribute_total_utility, max_cost_to_indifference, quality_weight, solve_convergence_constant,
    Direction, QualityWeight, UtilityCurve,
};

/// Probabilities of the low / nominal / high scenarios, in that order.
pub type ScenarioProbabilities = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetPair {
    pub cost: f64,
    pub quality: f64,
}

impl TargetPair {
    pub fn new(cost: f64, quality: f64) -> Self {
        Self { cost, quality }
    }
}

/// Low, nominal and high cost/quality outcomes for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTargets {
    pub low: TargetPair,
    pub nominal: TargetPair,
    pub high: TargetPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_override: Option<ScenarioProbabilities>,
}

impl ScenarioTargets {
    pub fn new(low: TargetPair, nominal: TargetPair, high: TargetPair) -> Self {
        Self {
            low,
            nominal,
            high,
            probability_override: None,
        }
    }

    /// Targets moving cost and quality together: `(x, x)` for each level.
    pub fn diagonal(low: f64, nominal: f64, high: f64) -> Self {
        Self::new(
            TargetPair::new(low, low),
            TargetPair::new(nominal, nominal),
            TargetPair::new(high, high),
        )
    }

    pub fn with_override(mut self, probabilities: ScenarioProbabilities) -> Self {
        self.probability_override = Some(probabilities);
        self
    }

    pub fn pairs(&self) -> [TargetPair; 3] {
        [self.low, self.nominal, self.high]
    }

    pub fn validate(&self, lower: f64, upper: f64) -> Result<()> {
        let pairs = self.pairs();
        for (name, p) in ["low", "nominal", "high"].iter().zip(&pairs) {
            for (what, v) in [("cost", p.cost), ("quality", p.quality)] {
                if !(lower..=upper).contains(&v) {
                    return Err(Error::validation(format!(
                        "{name} {what} target {v} outside [{lower}, {upper}]"
                    )));
                }
            }
        }
        for w in pairs.windows(2) {
            if w[1].quality < w[0].quality {
                return Err(Error::validation(
                    "quality targets must be nondecreasing from low to high",
                ));
            }
            if w[1].cost < w[0].cost {
                return Err(Error::validation(
                    "cost targets must be nondecreasing from low to high",
                ));
            }
        }
        if let Some(p) = self.probability_override {
            validate_probabilities(&p)?;
        }
        Ok(())
    }
}

pub(crate) fn validate_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::validation(format!(
            "scenario probabilities must be nonnegative, got {p:?}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "scenario probabilities must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeTargets {
    pub attribute_id: String,
    pub targets: ScenarioTargets,
}

/// A named bundle of attributes with their scenario targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub plan_id: String,
    pub attributes: Vec<AttributeTargets>,
    #[serde(default)]
    pub is_status_quo: bool,
    /// Read survey measurements recorded under this plan id instead of
    /// `plan_id`; lets a status-quo plan share another plan's survey.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurements_from: Option<String>,
}

impl PlanSpec {
    pub fn new(plan_id: impl Into<String>, attributes: Vec<AttributeTargets>) -> Self {
        Self {
            plan_id: plan_id.into(),
            attributes,
            is_status_quo: false,
            measurements_from: None,
        }
    }

    /// A one-attribute plan.
    pub fn single(
        plan_id: impl Into<String>,
        attribute_id: impl Into<String>,
        targets: ScenarioTargets,
    ) -> Self {
        Self::new(
            plan_id,
            vec![AttributeTargets {
                attribute_id: attribute_id.into(),
                targets,
            }],
        )
    }

    pub fn measurement_key(&self) -> &str {
        self.measurements_from.as_deref().unwrap_or(&self.plan_id)
    }

    pub fn validate(&self, config: &AnalysisConfig) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::validation(format!(
                "plan `{}` has no attributes",
                self.plan_id
            )));
        }
        for a in &self.attributes {
            a.targets
                .validate(config.lower, config.upper)
                .map_err(|e| Error::validation(format!("plan `{}`, attribute `{}`: {e}", self.plan_id, a.attribute_id)))?;
            if self.is_status_quo
                && a.targets
                    .pairs()
                    .iter()
                    .any(|p| p.cost != config.lower || p.quality != config.lower)
            {
                return Err(Error::validation(format!(
                    "status-quo plan `{}` must have every target at {}",
                    self.plan_id, config.lower
                )));
            }
        }
        Ok(())
    }

    /// The same plan with every target at `lower`, sharing this plan's
    /// measurements and scenario probabilities.
    pub fn status_quo_twin(&self, lower: f64, probabilities: ScenarioProbabilities) -> PlanSpec {
        let at_floor = ScenarioTargets::diagonal(lower, lower, lower);
        PlanSpec {
            plan_id: format!("{}:status_quo", self.plan_id),
            attributes: self
                .attributes
                .iter()
                .map(|a| AttributeTargets {
                    attribute_id: a.attribute_id.clone(),
                    targets: at_floor.clone().with_override(probabilities),
                })
                .collect(),
            is_status_quo: true,
            measurements_from: Some(self.measurement_key().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEvaluation {
    pub plan_id: String,
    pub scenario_probabilities: ScenarioProbabilities,
    pub scenario_utilities: [f64; 3],
    pub expected_utility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Go,
    NoGo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoNoGoResult {
    pub decision: Decision,
    pub plan: PlanEvaluation,
    pub status_quo: PlanEvaluation,
}

/// The nominal unit quality curve shared by every plan.
pub fn nominal_quality_curve(config: &AnalysisConfig) -> Result<UtilityCurve> {
    UtilityCurve::from_constant(
        config.lower,
        config.upper,
        config.k_q_nominal,
        Direction::Increasing,
    )
}

/// Splits probability across scenarios in proportion to the quality utility
/// each one adds over the previous target (or over `q_ref` for the first).
pub fn estimate_scenario_probabilities(
    targets: &ScenarioTargets,
    quality_curve: &UtilityCurve,
    q_ref: f64,
) -> Result<ScenarioProbabilities> {
    if q_ref > targets.low.quality {
        return Err(Error::domain(format!(
            "reference quality {q_ref} exceeds the low quality target {}",
            targets.low.quality
        )));
    }
    let u_ref = quality_curve.evaluate(q_ref)?;
    let u = [
        quality_curve.evaluate(targets.low.quality)?,
        quality_curve.evaluate(targets.nominal.quality)?,
        quality_curve.evaluate(targets.high.quality)?,
    ];
    let total = u[2] - u_ref;
    if total <= 0.0 {
        return Err(Error::DegenerateScenario(
            "scenarios add no quality over the reference".to_string(),
        ));
    }
    let p_b = ((u[1] - u[0]) / total).max(0.0);
    let p_c = ((u[2] - u[1]) / total).max(0.0);
    Ok([1.0 - p_b - p_c, p_b, p_c])
}

/// Per-attribute survey inputs for one evaluation: the cost indifference
/// probability and mean utilization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AttributeInputs {
    pub indifference: f64,
    pub utilization: f64,
}

impl AttributeInputs {
    pub fn from_measurement(m: &AttributeMeasurement, config: &AnalysisConfig) -> Result<Self> {
        Ok(Self {
            indifference: max_cost_to_indifference(m.mean_max_cost, config.max_possible_cost)?
                .value(),
            utilization: m.mean_utilization,
        })
    }
}

/// Looks up measurements for every attribute of `plan`, in attribute order.
pub(crate) fn plan_measurements<'a>(
    plan: &PlanSpec,
    measurements: &'a MeasurementSet,
) -> Result<Vec<&'a AttributeMeasurement>> {
    plan.attributes
        .iter()
        .map(|a| {
            measurements
                .get(plan.measurement_key(), &a.attribute_id)
                .map_err(|e| e.for_attribute(&a.attribute_id))
        })
        .collect()
}

/// Fits the cost curve unless every cost target sits at the floor, where the
/// decreasing utility is exactly 1 whatever the fit.
pub(crate) fn cost_curve_for(
    targets: &ScenarioTargets,
    indifference: f64,
    config: &AnalysisConfig,
) -> Result<UtilityCurve> {
    if targets.pairs().iter().all(|p| p.cost == config.lower) {
        return UtilityCurve::linear(config.lower, config.upper, Direction::Decreasing);
    }
    solve_convergence_constant(
        config.lower,
        config.upper,
        config.c_ref,
        indifference,
        Direction::Decreasing,
        config.fit_tolerance,
    )
}

/// Scenario utilities of a plan given per-attribute cost curves, benefit
/// weights and a shared benefit curve (quality, or risk mitigation).
pub(crate) fn scenario_utilities_with(
    plan: &PlanSpec,
    cost_curves: &[UtilityCurve],
    weights: &[QualityWeight],
    benefit_curve: &UtilityCurve,
    w_c: f64,
) -> Result<[f64; 3]> {
    let mut totals = [0.0; 3];
    for ((attr, cost_curve), &w) in plan.attributes.iter().zip(cost_curves).zip(weights) {
        for (total, pair) in totals.iter_mut().zip(attr.targets.pairs()) {
            *total += attribute_total_utility(pair.cost, pair.quality, w_c, w, cost_curve, benefit_curve)
                .map_err(|e| e.for_attribute(&attr.attribute_id))?;
        }
    }
    Ok(totals)
}

pub(crate) fn scenario_utilities_from_inputs(
    plan: &PlanSpec,
    inputs: &[AttributeInputs],
    quality_curve: &UtilityCurve,
    config: &AnalysisConfig,
) -> Result<[f64; 3]> {
    let mut curves = Vec::with_capacity(inputs.len());
    let mut weights = Vec::with_capacity(inputs.len());
    for (attr, input) in plan.attributes.iter().zip(inputs) {
        let label = |e: Error| e.for_attribute(&attr.attribute_id);
        curves.push(cost_curve_for(&attr.targets, input.indifference, config).map_err(label)?);
        weights.push(
            quality_weight(input.utilization, config.lower, config.upper, config.w_q).map_err(label)?,
        );
    }
    scenario_utilities_with(plan, &curves, &weights, quality_curve, config.w_c)
}

/// Scenario utilities of `plan` at the measurement means.
pub fn plan_scenario_utilities(
    plan: &PlanSpec,
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
) -> Result<[f64; 3]> {
    let inputs = plan_measurements(plan, measurements)?
        .into_iter()
        .zip(&plan.attributes)
        .map(|(m, a)| {
            AttributeInputs::from_measurement(m, config).map_err(|e| e.for_attribute(&a.attribute_id))
        })
        .collect::<Result<Vec<_>>>()?;
    scenario_utilities_from_inputs(plan, &inputs, &nominal_quality_curve(config)?, config)
}

/// Scenario probabilities for a plan: the first attribute's override when
/// given, otherwise estimated from its quality targets with the reference
/// shifted to the domain floor. A status-quo plan without an override puts
/// all weight on the first scenario; its scenarios coincide anyway.
pub fn plan_probabilities(
    plan: &PlanSpec,
    quality_curve: &UtilityCurve,
    config: &AnalysisConfig,
) -> Result<ScenarioProbabilities> {
    let first = plan
        .attributes
        .first()
        .ok_or_else(|| Error::validation(format!("plan `{}` has no attributes", plan.plan_id)))?;
    if let Some(p) = first.targets.probability_override {
        validate_probabilities(&p)?;
        return Ok(p);
    }
    if plan.is_status_quo {
        return Ok([1.0, 0.0, 0.0]);
    }
    estimate_scenario_probabilities(&first.targets, quality_curve, config.lower)
        .map_err(|e| e.for_attribute(&first.attribute_id))
}

/// Probability-weighted utility, written so equal scenario utilities return
/// that utility bit for bit.
pub fn expected_value(probabilities: &ScenarioProbabilities, utilities: &[f64; 3]) -> f64 {
    let base = utilities[0];
    base + probabilities[1] * (utilities[1] - base) + probabilities[2] * (utilities[2] - base)
}

pub fn expected_plan_utility(
    plan: &PlanSpec,
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
) -> Result<PlanEvaluation> {
    plan.validate(config)?;
    let quality_curve = nominal_quality_curve(config)?;
    let probabilities = plan_probabilities(plan, &quality_curve, config)?;
    let scenario_utilities = plan_scenario_utilities(plan, measurements, config)?;
    Ok(PlanEvaluation {
        plan_id: plan.plan_id.clone(),
        scenario_probabilities: probabilities,
        scenario_utilities,
        expected_utility: expected_value(&probabilities, &scenario_utilities),
    })
}

/// Evaluates every plan and orders them by expected utility, highest first;
/// ties keep declaration order.
pub fn rank_plans(
    plans: &[PlanSpec],
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
) -> Result<Vec<PlanEvaluation>> {
    if plans.is_empty() {
        return Err(Error::validation("at least one plan is required"));
    }
    let mut evals = plans
        .par_iter()
        .map(|p| expected_plan_utility(p, measurements, config))
        .collect::<Result<Vec<_>>>()?;
    evals.sort_by(|a, b| b.expected_utility.total_cmp(&a.expected_utility));
    Ok(evals)
}

/// Compares a plan with its status-quo twin; `Go` only on strict improvement.
pub fn go_no_go(
    plan: &PlanSpec,
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
) -> Result<GoNoGoResult> {
    if plan.is_status_quo {
        return Err(Error::validation(format!(
            "plan `{}` is already the status quo",
            plan.plan_id
        )));
    }
    let evaluated = expected_plan_utility(plan, measurements, config)?;
    let twin = plan.status_quo_twin(config.lower, evaluated.scenario_probabilities);
    let status_quo = expected_plan_utility(&twin, measurements, config)?;
    let decision = if evaluated.expected_utility > status_quo.expected_utility {
        Decision::Go
    } else {
        Decision::NoGo
    };
    Ok(GoNoGoResult {
        decision,
        plan: evaluated,
        status_quo,
    })
}
