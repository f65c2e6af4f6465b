use serde::{Deserialize, Serialize};

use super::criteria::{apply_decision_criteria, weighted_sum, CriteriaOutcome};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::plan::{plan_scenario_utilities, PlanSpec, ScenarioProbabilities};
use crate::survey::MeasurementSet;

/// One probability assignment and the winners it produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// The triple applied to each plan, in plan order.
    pub probability_assignment: Vec<ScenarioProbabilities>,
    pub best_by_criterion: CriteriaOutcome,
    pub expected_utilities: Vec<f64>,
    /// Expected utility of the best plan minus the runner-up.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySweep {
    pub plan_ids: Vec<String>,
    pub scenario_utilities: Vec<[f64; 3]>,
    pub increment: f64,
    pub hurwicz_alpha: f64,
    pub results: Vec<SweepResult>,
}

/// Number of lattice steps per unit for `increment`, which must divide 1.
pub fn lattice_steps(increment: f64) -> Result<u32> {
    if !(increment > 0.0 && increment <= 0.5) {
        return Err(Error::domain(format!(
            "sweep increment {increment} outside (0, 0.5]"
        )));
    }
    let n = (1.0 / increment).round();
    if (n * increment - 1.0).abs() > 1e-9 || n > 10_000.0 {
        return Err(Error::domain(format!(
            "sweep increment {increment} does not divide 1"
        )));
    }
    Ok(n as u32)
}

/// Every triple on the lattice, lexicographically descending.
pub fn probability_lattice(increment: f64) -> Result<Vec<ScenarioProbabilities>> {
    let n = lattice_steps(increment)?;
    let nf = f64::from(n);
    let mut out = Vec::with_capacity(((n + 1) * (n + 2) / 2) as usize);
    for i in (0..=n).rev() {
        for j in (0..=n - i).rev() {
            let k = n - i - j;
            out.push([f64::from(i) / nf, f64::from(j) / nf, f64::from(k) / nf]);
        }
    }
    Ok(out)
}

/// Sweeps the same probability triple across all plans at once.
pub fn probability_sweep(
    plans: &[PlanSpec],
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
    increment: f64,
) -> Result<ProbabilitySweep> {
    let lattice = probability_lattice(increment)?;
    if plans.is_empty() {
        return Err(Error::validation("at least one plan is required"));
    }
    let plan_ids: Vec<String> = plans.iter().map(|p| p.plan_id.clone()).collect();
    let utilities = plans
        .iter()
        .map(|p| {
            p.validate(config)?;
            plan_scenario_utilities(p, measurements, config)
        })
        .collect::<Result<Vec<_>>>()?;

    let results = lattice
        .into_iter()
        .map(|triple| {
            let assignment = vec![triple; plans.len()];
            let best = apply_decision_criteria(&plan_ids, &utilities, &assignment, config.hurwicz_alpha)?;
            let expected: Vec<f64> = utilities.iter().map(|u| weighted_sum(&triple, u)).collect();
            let winner = best.expected_utility.plan_index;
            let runner_up = expected
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != winner)
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            let margin = if runner_up.is_finite() {
                expected[winner] - runner_up
            } else {
                0.0
            };
            Ok(SweepResult {
                probability_assignment: assignment,
                best_by_criterion: best,
                expected_utilities: expected,
                margin,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ProbabilitySweep {
        plan_ids,
        scenario_utilities: utilities,
        increment,
        hurwicz_alpha: config.hurwicz_alpha,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::ScenarioTargets;
    use crate::survey::AttributeMeasurement;

    #[test]
    fn half_step_lattice() {
        let l = probability_lattice(0.5).unwrap();
        assert_eq!(
            l,
            vec![
                [1.0, 0.0, 0.0],
                [0.5, 0.5, 0.0],
                [0.5, 0.0, 0.5],
                [0.0, 1.0, 0.0],
                [0.0, 0.5, 0.5],
                [0.0, 0.0, 1.0],
            ]
        );
    }

    #[test]
    fn lattice_sizes_and_sums() {
        for n in [2u32, 4, 10, 50] {
            let l = probability_lattice(1.0 / f64::from(n)).unwrap();
            assert_eq!(l.len() as u32, (n + 1) * (n + 2) / 2);
            assert!(l.iter().all(|t| (t.iter().sum::<f64>() - 1.0).abs() < 1e-12));
            assert!(l.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn bad_increments() {
        for inc in [0.0, -0.1, 0.6, 0.3, f64::NAN] {
            assert!(matches!(probability_lattice(inc), Err(Error::Domain(_))), "{inc}");
        }
    }

    fn measurements() -> MeasurementSet {
        MeasurementSet::new()
            .with("A", "x", AttributeMeasurement::exact(5.0, 2.5))
            .with("B", "x", AttributeMeasurement::exact(5.0, 2.5))
    }

    #[test]
    fn identical_plans_have_zero_margin() {
        let a = PlanSpec::single("A", "x", ScenarioTargets::diagonal(2.0, 3.0, 4.0));
        let b = PlanSpec::single("B", "x", ScenarioTargets::diagonal(2.0, 3.0, 4.0));
        let s = probability_sweep(&[a, b], &measurements(), &AnalysisConfig::default(), 0.1).unwrap();
        assert_eq!(s.results.len(), 66);
        for r in &s.results {
            assert_eq!(r.margin, 0.0);
            assert!(r.best_by_criterion.iter().all(|(_, o)| o.plan_id == "A"));
        }
    }

    #[test]
    fn single_plan_always_wins() {
        let a = PlanSpec::single("A", "x", ScenarioTargets::diagonal(2.0, 3.0, 4.0));
        let s = probability_sweep(&[a], &measurements(), &AnalysisConfig::default(), 0.25).unwrap();
        assert!(s.results.iter().all(|r| r.margin == 0.0 && r.best_by_criterion.expected_utility.plan_id == "A"));
    }
}
