use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::plan::{
    cost_curve_for, expected_value, nominal_quality_curve, plan_measurements, plan_probabilities,
    scenario_utilities_with, PlanSpec, ScenarioProbabilities,
};
use crate::survey::{AttributeMeasurement, MeasurementSet};
use crate::utility::{indifference_lower_bound, quality_weight, UtilityCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower_edge: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub draw_count: u64,
    pub mean_delta: f64,
    pub stdev_delta: f64,
    pub share_below_zero: f64,
    pub histogram: Vec<HistogramBin>,
    pub seed: u64,
}

/// Draw count, seed and optional worker count for a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloOptions {
    pub draws: u64,
    pub seed: u64,
    /// Rayon worker count; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl MonteCarloOptions {
    pub fn new(draws: u64, seed: u64) -> Self {
        Self {
            draws,
            seed,
            threads: None,
        }
    }

    pub fn from_config(config: &AnalysisConfig) -> Self {
        Self::new(config.households, config.seed)
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

/// One simulated household: the utility difference and the indifference
/// probabilities sampled for each side, in attribute order.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawOutcome {
    pub delta: f64,
    pub indifference_a: Vec<f64>,
    pub indifference_b: Vec<f64>,
}

/// The random source for draw `index`: independent of worker scheduling.
pub(crate) fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples a normal restricted to `[lo, hi]` (or `(lo, hi)` when `open`),
/// also rejecting values `accept` refuses.
#[allow(clippy::too_many_arguments)]
pub(crate) fn truncated_normal<R: Rng, T>(
    rng: &mut R,
    mean: f64,
    stdev: f64,
    (lo, hi): (f64, f64),
    open: bool,
    limit: u32,
    what: &str,
    mut accept: impl FnMut(f64) -> Option<T>,
) -> Result<(f64, T)> {
    let inside = |x: f64| {
        if open {
            lo < x && x < hi
        } else {
            lo <= x && x <= hi
        }
    };
    if !(mean.is_finite() && stdev.is_finite() && stdev >= 0.0) {
        return Err(Error::domain(format!(
            "{what}: invalid normal parameters mean {mean}, stdev {stdev}"
        )));
    }
    if stdev == 0.0 {
        if inside(mean) {
            if let Some(t) = accept(mean) {
                return Ok((mean, t));
            }
        }
        return Err(Error::SamplingExhausted(format!(
            "{what}: point mass at {mean} is not admissible"
        )));
    }
    let normal = Normal::new(mean, stdev).map_err(|e| Error::domain(format!("{what}: {e}")))?;
    for _ in 0..limit {
        let x = rng.sample(normal);
        if inside(x) {
            if let Some(t) = accept(x) {
                return Ok((x, t));
            }
        }
    }
    Err(Error::SamplingExhausted(format!(
        "{what}: no admissible value in {limit} attempts (mean {mean}, stdev {stdev})"
    )))
}

/// A plan resolved for sampling: measurements and fixed scenario probabilities.
struct SampledPlan<'a> {
    plan: &'a PlanSpec,
    measurements: Vec<&'a AttributeMeasurement>,
    probabilities: ScenarioProbabilities,
}

impl<'a> SampledPlan<'a> {
    fn new(
        plan: &'a PlanSpec,
        measurements: &'a MeasurementSet,
        quality: &UtilityCurve,
        config: &AnalysisConfig,
    ) -> Result<Self> {
        plan.validate(config)?;
        Ok(Self {
            plan,
            measurements: plan_measurements(plan, measurements)?,
            probabilities: plan_probabilities(plan, quality, config)?,
        })
    }

    /// Samples every attribute and returns (expected utility, sampled P_i).
    fn draw<R: Rng>(
        &self,
        rng: &mut R,
        bound: f64,
        quality: &UtilityCurve,
        config: &AnalysisConfig,
    ) -> Result<(f64, Vec<f64>)> {
        let n = self.measurements.len();
        let mut curves = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut sampled = Vec::with_capacity(n);
        for (attr, m) in self.plan.attributes.iter().zip(&self.measurements) {
            let label = |e: Error| e.for_attribute(&attr.attribute_id);
            let mpc = config.max_possible_cost;
            let (p, curve) = truncated_normal(
                rng,
                1.0 - m.mean_max_cost / mpc,
                m.stdev_max_cost / mpc,
                (bound, 1.0),
                true,
                config.resample_limit,
                "indifference probability",
                |p| cost_curve_for(&attr.targets, p, config).ok(),
            )
            .map_err(label)?;
            let (_, weight) = truncated_normal(
                rng,
                m.mean_utilization,
                m.stdev_utilization,
                (config.lower, config.upper),
                false,
                config.resample_limit,
                "utilization",
                |u| quality_weight(u, config.lower, config.upper, config.w_q).ok(),
            )
            .map_err(label)?;
            sampled.push(p);
            curves.push(curve);
            weights.push(weight);
        }
        let utilities = scenario_utilities_with(self.plan, &curves, &weights, quality, config.w_c)?;
        Ok((expected_value(&self.probabilities, &utilities), sampled))
    }
}

pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every draw and returns them in draw order. Plan A's attributes are
/// sampled before plan B's from the draw's own stream.
pub fn simulate_draws(
    plan_a: &PlanSpec,
    plan_b: &PlanSpec,
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
    options: MonteCarloOptions,
) -> Result<Vec<DrawOutcome>> {
    if options.draws == 0 {
        return Err(Error::validation("Monte Carlo needs at least one draw"));
    }
    let quality = nominal_quality_curve(config)?;
    let bound = indifference_lower_bound(config.c_ref, config.lower, config.upper)?;
    let a = SampledPlan::new(plan_a, measurements, &quality, config)?;
    let b = SampledPlan::new(plan_b, measurements, &quality, config)?;

    let outcomes: Vec<Result<DrawOutcome>> = with_pool(options.threads, || {
        (0..options.draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = draw_rng(options.seed, i);
                let (eu_a, indifference_a) = a.draw(&mut rng, bound, &quality, config)?;
                let (eu_b, indifference_b) = b.draw(&mut rng, bound, &quality, config)?;
                Ok(DrawOutcome {
                    delta: eu_a - eu_b,
                    indifference_a,
                    indifference_b,
                })
            })
            .collect()
    })?;
    outcomes.into_iter().collect()
}

/// Mean, sample stdev, share below zero and histogram of `deltas`.
pub fn summarize_deltas(deltas: &[f64], seed: u64, bins: usize) -> Result<MonteCarloResult> {
    if deltas.is_empty() {
        return Err(Error::validation("no draws to summarize"));
    }
    let n = deltas.len() as f64;
    let mean = deltas.iter().sum::<f64>() / n;
    let stdev = if deltas.len() > 1 {
        (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let below = deltas.iter().filter(|d| **d < 0.0).count();
    Ok(MonteCarloResult {
        draw_count: deltas.len() as u64,
        mean_delta: mean,
        stdev_delta: stdev,
        share_below_zero: below as f64 / n,
        histogram: histogram(deltas, bins),
        seed,
    })
}

/// Equal-width bins spanning the observed range; a single bin when every
/// value is equal.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return Vec::new();
    }
    if min == max || bins <= 1 {
        return vec![HistogramBin {
            lower_edge: min,
            count: values.len() as u64,
        }];
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0u64; bins];
    for v in values {
        let i = (((v - min) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower_edge: min + width * i as f64,
            count,
        })
        .collect()
}

/// Simulated distribution of EU(plan_a) − EU(plan_b) across households.
pub fn monte_carlo_compare(
    plan_a: &PlanSpec,
    plan_b: &PlanSpec,
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
    options: MonteCarloOptions,
) -> Result<MonteCarloResult> {
    let draws = simulate_draws(plan_a, plan_b, measurements, config, options)?;
    let deltas: Vec<f64> = draws.iter().map(|d| d.delta).collect();
    summarize_deltas(&deltas, options.seed, config.histogram_bins)
}

/// Monte Carlo comparison of `plan` against its status-quo twin.
pub fn monte_carlo_go_no_go(
    plan: &PlanSpec,
    measurements: &MeasurementSet,
    config: &AnalysisConfig,
    options: MonteCarloOptions,
) -> Result<MonteCarloResult> {
    let probabilities = plan_probabilities(plan, &nominal_quality_curve(config)?, config)?;
    let twin = plan.status_quo_twin(config.lower, probabilities);
    monte_carlo_compare(plan, &twin, measurements, config, options)
}
