//! Cost versus risk-mitigation tolerance for infrastructure choices, with
//! operational lifespan standing in for risk mitigation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::montecarlo::{
    draw_rng, summarize_deltas, truncated_normal, with_pool, MonteCarloOptions, MonteCarloResult,
};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::plan::{
    expected_value, plan_probabilities, scenario_utilities_with, PlanSpec, ScenarioProbabilities,
    ScenarioTargets,
};
use crate::survey::{matching, moments, ResponseRecord};
use crate::utility::{
    indifference_lower_bound, max_cost_to_indifference, solve_convergence_constant, Direction,
    IndifferenceProbability, QualityWeight, UtilityCurve,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfraMeasurement {
    pub mean_max_cost: f64,
    pub stdev_max_cost: f64,
    pub mean_min_lifespan: f64,
    pub stdev_min_lifespan: f64,
    pub count: u64,
    pub max_possible_cost: f64,
    pub max_possible_lifespan: f64,
}

impl InfraMeasurement {
    /// A zero-spread measurement.
    pub fn exact(
        mean_max_cost: f64,
        max_possible_cost: f64,
        mean_min_lifespan: f64,
        max_possible_lifespan: f64,
    ) -> Self {
        Self {
            mean_max_cost,
            stdev_max_cost: 0.0,
            mean_min_lifespan,
            stdev_min_lifespan: 0.0,
            count: 1,
            max_possible_cost,
            max_possible_lifespan,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mean_max_cost,
            self.stdev_max_cost,
            self.mean_min_lifespan,
            self.stdev_min_lifespan,
            self.max_possible_cost,
            self.max_possible_lifespan,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("infrastructure measurement must be finite"));
        }
        if self.stdev_max_cost < 0.0 || self.stdev_min_lifespan < 0.0 {
            return Err(Error::validation("standard deviations must be nonnegative"));
        }
        if self.max_possible_lifespan <= 0.0 {
            return Err(Error::validation("max_possible_lifespan must be positive"));
        }
        if !(0.0..=self.max_possible_lifespan).contains(&self.mean_min_lifespan) {
            return Err(Error::validation(format!(
                "mean_min_lifespan {} outside [0, {}]",
                self.mean_min_lifespan, self.max_possible_lifespan
            )));
        }
        if self.max_possible_cost <= 0.0 || !(0.0..=self.max_possible_cost).contains(&self.mean_max_cost) {
            return Err(Error::validation(format!(
                "mean_max_cost {} outside [0, {}]",
                self.mean_max_cost, self.max_possible_cost
            )));
        }
        Ok(())
    }

    pub fn cost_pi(&self) -> Result<f64> {
        Ok(max_cost_to_indifference(self.mean_max_cost, self.max_possible_cost)?.value())
    }

    pub fn risk_pi(&self) -> Result<f64> {
        Ok(lifespan_to_indifference(self.mean_min_lifespan, self.max_possible_lifespan)?.value())
    }
}

/// Cost and lifespan moments for one `(plan, attribute)`; every matching
/// record must carry a lifespan.
pub fn summarize_infra(
    records: &[ResponseRecord],
    plan_id: &str,
    attribute_id: &str,
    config: &AnalysisConfig,
) -> Result<InfraMeasurement> {
    let max_possible_lifespan = config.max_possible_lifespan.ok_or_else(|| {
        Error::validation("infrastructure analysis requires max_possible_lifespan in the config")
    })?;
    let rows = matching(records, plan_id, attribute_id, config)?;
    let mut lifespans = rows
        .iter()
        .map(|r| {
            r.lifespan.ok_or_else(|| {
                Error::validation(format!(
                    "respondent `{}` has no lifespan for plan `{plan_id}`, attribute `{attribute_id}`",
                    r.respondent_id
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut costs: Vec<f64> = rows.iter().map(|r| r.max_cost).collect();
    let (mean_max_cost, stdev_max_cost) = moments(&mut costs);
    let (mean_min_lifespan, stdev_min_lifespan) = moments(&mut lifespans);
    Ok(InfraMeasurement {
        mean_max_cost,
        stdev_max_cost,
        mean_min_lifespan,
        stdev_min_lifespan,
        count: rows.len() as u64,
        max_possible_cost: config.max_possible_cost,
        max_possible_lifespan,
    })
}

/// `min_lifespan / max_possible_lifespan`: demanding a longer lifespan reads
/// as greater risk sensitivity.
pub fn lifespan_to_indifference(
    min_lifespan: f64,
    max_possible_lifespan: f64,
) -> Result<IndifferenceProbability> {
    if !(max_possible_lifespan.is_finite() && max_possible_lifespan > 0.0) {
        return Err(Error::domain(format!(
            "max_possible_lifespan must be positive, got {max_possible_lifespan}"
        )));
    }
    if !(0.0..=max_possible_lifespan).contains(&min_lifespan) {
        return Err(Error::domain(format!(
            "lifespan {min_lifespan} outside [0, {max_possible_lifespan}]"
        )));
    }
    IndifferenceProbability::new(min_lifespan / max_possible_lifespan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfraPreference {
    LowCostLowMitigation,
    HighCostHighMitigation,
    Indifferent,
}

impl InfraPreference {
    pub fn swapped(self) -> Self {
        match self {
            Self::LowCostLowMitigation => Self::HighCostHighMitigation,
            Self::HighCostHighMitigation => Self::LowCostLowMitigation,
            Self::Indifferent => Self::Indifferent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraRecommendation {
    #[serde(with = "signed_constant")]
    pub cost_constant: f64,
    #[serde(with = "signed_constant")]
    pub risk_constant: f64,
    pub preference: InfraPreference,
    pub cost_pi: f64,
    pub risk_pi: f64,
}

/// Tolerance-constant fit: increasing curve through `(c_ref, p)`.
fn tolerance_curve(p: f64, config: &AnalysisConfig, label: &str) -> Result<UtilityCurve> {
    let bound = indifference_lower_bound(config.c_ref, config.lower, config.upper)?;
    let fit = if p < bound {
        Err(Error::constraint(format!(
            "indifference probability {p} is below the admissible bound {bound}"
        )))
    } else {
        solve_convergence_constant(
            config.lower,
            config.upper,
            config.c_ref,
            p,
            Direction::Increasing,
            config.fit_tolerance,
        )
    };
    fit.map_err(|e| e.for_attribute(label))
}

/// Flips an increasing tolerance curve into the matching cost curve.
fn as_cost_curve(curve: &UtilityCurve) -> Result<UtilityCurve> {
    UtilityCurve::from_constant(curve.lower, curve.upper, curve.k, Direction::Decreasing)
}

fn compare_constants(cost_constant: f64, risk_constant: f64, config: &AnalysisConfig) -> InfraPreference {
    let tie = config.infra_tie_tolerance * config.domain_width();
    if cost_constant == risk_constant || (cost_constant - risk_constant).abs() <= tie {
        InfraPreference::Indifferent
    } else if risk_constant < cost_constant {
        InfraPreference::HighCostHighMitigation
    } else {
        InfraPreference::LowCostLowMitigation
    }
}

/// Recommendation from already-derived indifference probabilities.
pub fn infra_preference_from_probabilities(
    cost_pi: f64,
    risk_pi: f64,
    config: &AnalysisConfig,
) -> Result<InfraRecommendation> {
    let cost = tolerance_curve(cost_pi, config, "cost")?;
    let risk = tolerance_curve(risk_pi, config, "risk")?;
    Ok(InfraRecommendation {
        cost_constant: cost.k,
        risk_constant: risk.k,
        preference: compare_constants(cost.k, risk.k, config),
        cost_pi,
        risk_pi,
    })
}

/// Fits cost and risk tolerance curves from the measurement and compares
/// their constants: a smaller risk constant favors high mitigation.
pub fn infra_preference(measurement: &InfraMeasurement, config: &AnalysisConfig) -> Result<InfraRecommendation> {
    measurement.validate()?;
    infra_preference_from_probabilities(
        measurement.cost_pi().map_err(|e| e.for_attribute("cost"))?,
        measurement.risk_pi().map_err(|e| e.for_attribute("risk"))?,
        config,
    )
}

/// The two implementations being weighed; `quality` targets are read as
/// risk-mitigation levels on the shared `[L, H]` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfraScenarioSpec {
    pub low_cost_low_mitigation: ScenarioTargets,
    pub high_cost_high_mitigation: ScenarioTargets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraOptionEvaluation {
    pub option: InfraPreference,
    pub scenario_probabilities: ScenarioProbabilities,
    pub scenario_utilities: [f64; 3],
    pub expected_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraComparison {
    pub recommendation: InfraRecommendation,
    pub options: [InfraOptionEvaluation; 2],
    /// Which implementation has the higher expected utility.
    pub preferred: InfraPreference,
    /// Δ = EU(low cost) − EU(high mitigation) across simulated households.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloResult>,
}

fn option_plan(targets: &ScenarioTargets, option: InfraPreference) -> PlanSpec {
    let id = match option {
        InfraPreference::LowCostLowMitigation => "low_cost_low_mitigation",
        _ => "high_cost_high_mitigation",
    };
    PlanSpec::single(id, "infrastructure", targets.clone())
}

struct InfraOption {
    plan: PlanSpec,
    probabilities: ScenarioProbabilities,
}

impl InfraOption {
    fn utilities(&self, cost: &UtilityCurve, risk: &UtilityCurve, config: &AnalysisConfig) -> Result<[f64; 3]> {
        let weight = QualityWeight::new(config.risk_weight)?;
        scenario_utilities_with(&self.plan, &[as_cost_curve(cost)?], &[weight], risk, config.w_c)
    }
}

/// Evaluates both implementations under the fitted cost and risk curves,
/// optionally simulating household preference between them.
pub fn infra_scenario_compare(
    spec: &InfraScenarioSpec,
    measurement: &InfraMeasurement,
    config: &AnalysisConfig,
    monte_carlo: Option<MonteCarloOptions>,
) -> Result<InfraComparison> {
    let recommendation = infra_preference(measurement, config)?;
    let cost = tolerance_curve(recommendation.cost_pi, config, "cost")?;
    let risk = tolerance_curve(recommendation.risk_pi, config, "risk")?;

    let kinds = [
        InfraPreference::LowCostLowMitigation,
        InfraPreference::HighCostHighMitigation,
    ];
    let targets = [&spec.low_cost_low_mitigation, &spec.high_cost_high_mitigation];
    let mut options = Vec::with_capacity(2);
    let mut evaluations = Vec::with_capacity(2);
    for (kind, t) in kinds.into_iter().zip(targets) {
        let plan = option_plan(t, kind);
        plan.validate(config)?;
        let probabilities = plan_probabilities(&plan, &risk, config)?;
        let option = InfraOption { plan, probabilities };
        let utilities = option.utilities(&cost, &risk, config)?;
        evaluations.push(InfraOptionEvaluation {
            option: kind,
            scenario_probabilities: probabilities,
            scenario_utilities: utilities,
            expected_utility: expected_value(&probabilities, &utilities),
        });
        options.push(option);
    }
    let (low, high) = (evaluations[0].expected_utility, evaluations[1].expected_utility);
    let preferred = if low > high {
        InfraPreference::LowCostLowMitigation
    } else if high > low {
        InfraPreference::HighCostHighMitigation
    } else {
        InfraPreference::Indifferent
    };

    let monte_carlo = match monte_carlo {
        Some(opts) => Some(simulate(&options, measurement, config, opts)?),
        None => None,
    };
    let [low_eval, high_eval]: [InfraOptionEvaluation; 2] = evaluations
        .try_into()
        .map_err(|_| Error::Internal("expected two options".into()))?;
    Ok(InfraComparison {
        recommendation,
        options: [low_eval, high_eval],
        preferred,
        monte_carlo,
    })
}

fn simulate(
    options: &[InfraOption],
    m: &InfraMeasurement,
    config: &AnalysisConfig,
    opts: MonteCarloOptions,
) -> Result<MonteCarloResult> {
    if opts.draws == 0 {
        return Err(Error::validation("Monte Carlo needs at least one draw"));
    }
    let bound = indifference_lower_bound(config.c_ref, config.lower, config.upper)?;
    let sample = |rng: &mut rand_chacha::ChaCha8Rng, option: &InfraOption| -> Result<f64> {
        let (_, cost) = truncated_normal(
            rng,
            1.0 - m.mean_max_cost / m.max_possible_cost,
            m.stdev_max_cost / m.max_possible_cost,
            (bound, 1.0),
            true,
            config.resample_limit,
            "cost indifference probability",
            |p| tolerance_curve(p, config, "cost").ok(),
        )
        .map_err(|e| e.for_attribute("cost"))?;
        let (_, risk) = truncated_normal(
            rng,
            m.mean_min_lifespan / m.max_possible_lifespan,
            m.stdev_min_lifespan / m.max_possible_lifespan,
            (bound, 1.0),
            true,
            config.resample_limit,
            "risk indifference probability",
            |p| tolerance_curve(p, config, "risk").ok(),
        )
        .map_err(|e| e.for_attribute("risk"))?;
        let utilities = option.utilities(&cost, &risk, config)?;
        Ok(expected_value(&option.probabilities, &utilities))
    };
    let deltas: Vec<Result<f64>> = with_pool(opts.threads, || {
        (0..opts.draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = draw_rng(opts.seed, i);
                let low = sample(&mut rng, &options[0])?;
                let high = sample(&mut rng, &options[1])?;
                Ok(low - high)
            })
            .collect()
    })?;
    let deltas = deltas.into_iter().collect::<Result<Vec<_>>>()?;
    summarize_deltas(&deltas, opts.seed, config.histogram_bins)
}

/// Writes an infinite (linear) constant as `null`.
mod signed_constant {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> AnalysisConfig {
        AnalysisConfig {
            max_possible_lifespan: Some(40.0),
            ..AnalysisConfig::default()
        }
    }

    /// Oracle: increasing curve on [1, 5] through (1.2, p) by bisection on
    /// t = e^(-1/K) in (0, 1), where U(1.2) = (1 - t^0.2) / (1 - t^4).
    fn oracle_constant(p: f64) -> f64 {
        let f = |t: f64| (1.0 - t.powf(0.2)) / (1.0 - t.powi(4)) - p;
        let (mut lo, mut hi) = (1e-300f64, 1.0 - 1e-15);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        -1.0 / (0.5 * (lo + hi)).ln()
    }

    #[test]
    fn lifespan_mapping() {
        assert_eq!(lifespan_to_indifference(0.0, 40.0).unwrap().value(), 0.0);
        assert_eq!(lifespan_to_indifference(40.0, 40.0).unwrap().value(), 1.0);
        assert_eq!(lifespan_to_indifference(25.0, 40.0).unwrap().value(), 0.625);
        assert!(matches!(lifespan_to_indifference(41.0, 40.0), Err(Error::Domain(_))));
        assert!(matches!(lifespan_to_indifference(-1.0, 40.0), Err(Error::Domain(_))));
        assert!(matches!(lifespan_to_indifference(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn risk_sensitive_prefers_mitigation() {
        let m = InfraMeasurement::exact(30.0, 35.0, 35.0, 40.0);
        let r = infra_preference(&m, &cfg()).unwrap();
        assert_abs_diff_eq!(r.cost_pi, 1.0 / 7.0, epsilon = 1e-12);
        assert_eq!(r.risk_pi, 0.875);
        assert!(r.risk_constant < r.cost_constant);
        assert_eq!(r.preference, InfraPreference::HighCostHighMitigation);
        assert_abs_diff_eq!(r.cost_constant, oracle_constant(r.cost_pi), epsilon = 1e-6 * r.cost_constant);
        assert_abs_diff_eq!(r.risk_constant, oracle_constant(r.risk_pi), epsilon = 1e-6 * r.risk_constant);

        // mirrored: cost_pi 0.875, risk_pi 1/7
        let mirrored = InfraMeasurement::exact(35.0 / 8.0, 35.0, 40.0 / 7.0, 40.0);
        let r2 = infra_preference(&mirrored, &cfg()).unwrap();
        assert_eq!(r2.preference, InfraPreference::LowCostLowMitigation);
    }

    #[test]
    fn equal_probabilities_are_indifferent() {
        let m = InfraMeasurement::exact(17.5, 35.0, 20.0, 40.0);
        let r = infra_preference(&m, &cfg()).unwrap();
        assert_eq!(r.cost_constant, r.risk_constant);
        assert_eq!(r.preference, InfraPreference::Indifferent);
    }

    #[test]
    fn below_bound_is_labeled() {
        let m = InfraMeasurement::exact(20.0, 35.0, 1.0, 40.0);
        let err = infra_preference(&m, &cfg()).unwrap_err();
        assert_eq!(err.attribute(), Some("risk"));
        assert!(matches!(err.root(), Error::ConstraintViolation(_)));
    }

    #[test]
    fn summarize_requires_lifespan() {
        let recs = vec![
            ResponseRecord::new("r1", "Road", "paving", 10.0, 3.0).with_lifespan(20.0),
            ResponseRecord::new("r2", "Road", "paving", 20.0, 3.0).with_lifespan(30.0),
        ];
        let m = summarize_infra(&recs, "Road", "paving", &cfg()).unwrap();
        assert_eq!(m.mean_max_cost, 15.0);
        assert_eq!(m.mean_min_lifespan, 25.0);
        assert_eq!(m.max_possible_lifespan, 40.0);
        let bare = vec![ResponseRecord::new("r1", "Road", "paving", 10.0, 3.0)];
        assert!(summarize_infra(&bare, "Road", "paving", &cfg()).is_err());
        assert!(summarize_infra(&recs, "Road", "paving", &AnalysisConfig::default()).is_err());
    }

    fn spec() -> InfraScenarioSpec {
        InfraScenarioSpec {
            low_cost_low_mitigation: ScenarioTargets::diagonal(1.5, 2.0, 2.5),
            high_cost_high_mitigation: ScenarioTargets::diagonal(3.0, 3.5, 4.5),
        }
    }

    #[test]
    fn identical_targets_tie() {
        let s = InfraScenarioSpec {
            low_cost_low_mitigation: ScenarioTargets::diagonal(2.0, 3.0, 4.0),
            high_cost_high_mitigation: ScenarioTargets::diagonal(2.0, 3.0, 4.0),
        };
        let m = InfraMeasurement::exact(30.0, 35.0, 35.0, 40.0);
        let r = infra_scenario_compare(&s, &m, &cfg(), None).unwrap();
        assert_eq!(r.options[0].expected_utility, r.options[1].expected_utility);
        assert_eq!(r.preferred, InfraPreference::Indifferent);
    }

    #[test]
    fn indifferent_constants_leave_targets_to_decide() {
        let m = InfraMeasurement::exact(17.5, 35.0, 20.0, 40.0);
        let r = infra_scenario_compare(&spec(), &m, &cfg(), None).unwrap();
        assert_eq!(r.recommendation.preference, InfraPreference::Indifferent);
        // with equal curves the total moves with w_c·T(U(x)) + W·U(x); W = w_c here
        let u = UtilityCurve::from_constant(1.0, 5.0, r.recommendation.cost_constant, Direction::Increasing).unwrap();
        let oracle = |t: &ScenarioTargets, p: &ScenarioProbabilities| {
            let s: Vec<f64> = t.pairs().iter().map(|x| 2.0 * (1.0 - u.value(x.cost)) + 2.0 * u.value(x.quality)).collect();
            p[0] * s[0] + p[1] * s[1] + p[2] * s[2]
        };
        for (o, t) in r.options.iter().zip([&spec().low_cost_low_mitigation, &spec().high_cost_high_mitigation]) {
            assert_abs_diff_eq!(o.expected_utility, oracle(t, &o.scenario_probabilities), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_variance_monte_carlo_agrees() {
        let m = InfraMeasurement::exact(30.0, 35.0, 35.0, 40.0);
        let r = infra_scenario_compare(&spec(), &m, &cfg(), Some(MonteCarloOptions::new(20, 4))).unwrap();
        let mc = r.monte_carlo.unwrap();
        let expected = if r.preferred == InfraPreference::HighCostHighMitigation { 1.0 } else { 0.0 };
        assert_eq!(mc.share_below_zero, expected);
        assert_eq!(mc.histogram.iter().map(|b| b.count).sum::<u64>(), 20);
    }

    #[test]
    fn noisy_monte_carlo_is_seeded() {
        let m = InfraMeasurement {
            stdev_max_cost: 4.0,
            stdev_min_lifespan: 6.0,
            count: 40,
            ..InfraMeasurement::exact(25.0, 35.0, 30.0, 40.0)
        };
        let opts = MonteCarloOptions::new(500, 9);
        let a = infra_scenario_compare(&spec(), &m, &cfg(), Some(opts)).unwrap();
        let b = infra_scenario_compare(&spec(), &m, &cfg(), Some(opts.with_threads(2))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recommendation_serializes_linear_as_null() {
        let bound = 0.05;
        let r = infra_preference_from_probabilities(bound, 0.5, &cfg()).unwrap();
        assert!(r.cost_constant.is_infinite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"cost_constant\":null"));
        let back: InfraRecommendation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn swapping_inputs_swaps_preference(c in 0.06f64..0.999, r in 0.06f64..0.999) {
            let a = infra_preference_from_probabilities(c, r, &cfg()).unwrap();
            let b = infra_preference_from_probabilities(r, c, &cfg()).unwrap();
            prop_assert_eq!(a.preference.swapped(), b.preference);
        }

        #[test]
        fn constant_rule_matches_probability_shortcut(c in 0.06f64..0.999, r in 0.06f64..0.999) {
            prop_assume!((c - r).abs() > 1e-3);
            let a = infra_preference_from_probabilities(c, r, &cfg()).unwrap();
            let shortcut = if r > c { InfraPreference::HighCostHighMitigation } else { InfraPreference::LowCostLowMitigation };
            prop_assert_eq!(a.preference, shortcut);
        }
    }
}
