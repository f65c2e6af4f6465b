//! Decision criteria, probability sweeps and Monte Carlo preference
//! simulation.

pub mod criteria;
pub mod montecarlo;
pub mod sweep;

pub use criteria::{apply_decision_criteria, CriteriaOutcome, Criterion, CriterionOutcome};
pub use montecarlo::{
    monte_carlo_compare, monte_carlo_go_no_go, simulate_draws, summarize_deltas, DrawOutcome,
    HistogramBin, MonteCarloOptions, MonteCarloResult,
};
pub use sweep::{probability_lattice, probability_sweep, ProbabilitySweep, SweepResult};
