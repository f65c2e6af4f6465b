//! Plain-text renderings of reports.

use std::fmt::Write;

use super::report::{
    InfraPayload, MonteCarloPayload, RankPayload, ReportPayload, SampleSizePayload,
};
use crate::analysis::{Criterion, ProbabilitySweep};
use crate::infra::InfraPreference;
use crate::plan::{Decision, GoNoGoResult};

/// Three decimals, never negative zero.
pub fn fixed3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn percent(p: f64) -> String {
    let v = p * 100.0;
    if (v - v.round()).abs() < 1e-6 {
        format!("{:.0}%", v.round())
    } else {
        format!("{v:.1}%")
    }
}

pub fn render(payload: &ReportPayload) -> String {
    match payload {
        ReportPayload::Rank(p) => render_rank(p),
        ReportPayload::GoNoGo(p) => render_go_no_go(p),
        ReportPayload::Sweep(p) => render_sweep(p),
        ReportPayload::MonteCarlo(p) => render_monte_carlo(p),
        ReportPayload::Infra(p) => render_infra(p),
        ReportPayload::SampleSize(p) => render_sample_size(p),
    }
}

pub fn render_rank(p: &RankPayload) -> String {
    let mut out = String::from("Plan Ranking\n\n");
    for (i, e) in p.ranking.iter().enumerate() {
        let probs: Vec<String> = e.scenario_probabilities.iter().map(|v| percent(*v)).collect();
        let utils: Vec<String> = e.scenario_utilities.iter().map(|v| fixed3(*v)).collect();
        let _ = writeln!(
            out,
            "{}. {} Expected utility: {} Probabilities: [{}] Scenario utilities: [{}]",
            i + 1,
            e.plan_id,
            fixed3(e.expected_utility),
            probs.join(" "),
            utils.join(" ")
        );
    }
    out
}

pub fn render_go_no_go(r: &GoNoGoResult) -> String {
    let verdict = match r.decision {
        Decision::Go => "Go",
        Decision::NoGo => "NoGo",
    };
    format!(
        "Go/No-Go: {verdict}\n {} expected utility: {}\n Status quo expected utility: {}\n",
        r.plan.plan_id,
        fixed3(r.plan.expected_utility),
        fixed3(r.status_quo.expected_utility)
    )
}

/// The sweep log block: a legend mapping option numbers to plans, then one
/// result per probability assignment with the winner under each criterion.
pub fn render_sweep(s: &ProbabilitySweep) -> String {
    let mut out = String::from("Probability Sweep Results\n\n");
    for (i, id) in s.plan_ids.iter().enumerate() {
        let _ = writeln!(out, "Option {}: {id}", i + 1);
    }
    out.push_str("\nSweep 1\n");
    for (n, r) in s.results.iter().enumerate() {
        let probs: Vec<String> = r
            .probability_assignment
            .iter()
            .flat_map(|t| t.iter().map(|p| percent(*p)))
            .collect();
        let best = &r.best_by_criterion;
        let winner = best.expected_utility.plan_index;
        let _ = writeln!(out, "\nResult: {} Probabilities: [{}]", n + 1, probs.join(" "));
        let _ = writeln!(
            out,
            " Option {} is probably the best decision. Expected utility: {}",
            winner + 1,
            fixed3(r.expected_utilities[winner])
        );
        for (i, eu) in r.expected_utilities.iter().enumerate() {
            if i != winner {
                let _ = writeln!(
                    out,
                    " Expected utility of Option {}: {} Difference: {}",
                    i + 1,
                    fixed3(*eu),
                    fixed3(r.expected_utilities[winner] - eu)
                );
            }
        }
        out.push('\n');
        for (k, (c, o)) in best.iter().skip(1).enumerate() {
            let measure = if matches!(c, Criterion::MinimaxRegret) {
                "regret"
            } else {
                "utility"
            };
            let lead = if k == 0 { "" } else { " " };
            let _ = writeln!(
                out,
                "{lead}{} criterion {measure}: {} (Option {})",
                c.label(),
                fixed3(o.value),
                o.plan_index + 1
            );
        }
    }
    out
}

pub fn render_monte_carlo(p: &MonteCarloPayload) -> String {
    let r = &p.result;
    let mut out = format!(
        "Monte Carlo: {} vs {}\n Draws: {} Seed: {}\n Mean difference: {} Stdev: {}\n Population below zero: {:.1}%\n\nHistogram (lower edge, count)\n",
        p.plan_a,
        p.plan_b,
        r.draw_count,
        r.seed,
        fixed3(r.mean_delta),
        fixed3(r.stdev_delta),
        r.share_below_zero * 100.0
    );
    for b in &r.histogram {
        let _ = writeln!(out, " {} {}", fixed3(b.lower_edge), b.count);
    }
    out
}

fn preference_label(p: InfraPreference) -> &'static str {
    match p {
        InfraPreference::LowCostLowMitigation => "low cost, low risk mitigation",
        InfraPreference::HighCostHighMitigation => "high cost, high risk mitigation",
        InfraPreference::Indifferent => "indifferent",
    }
}

fn constant(k: f64) -> String {
    if k.is_finite() {
        fixed3(k)
    } else {
        "linear".to_string()
    }
}

pub fn render_infra(p: &InfraPayload) -> String {
    let rec = &p.comparison.recommendation;
    let mut out = format!(
        "Infrastructure: {} / {}\n Cost tolerance C: {} (P_i {})\n Risk tolerance R: {} (P_i {})\n Tolerance preference: {}\n",
        p.plan_id,
        p.attribute_id,
        constant(rec.cost_constant),
        fixed3(rec.cost_pi),
        constant(rec.risk_constant),
        fixed3(rec.risk_pi),
        preference_label(rec.preference)
    );
    for o in &p.comparison.options {
        let _ = writeln!(
            out,
            " {} expected utility: {}",
            preference_label(o.option),
            fixed3(o.expected_utility)
        );
    }
    let _ = writeln!(out, " Scenario preference: {}", preference_label(p.comparison.preferred));
    if let Some(mc) = &p.comparison.monte_carlo {
        let _ = writeln!(
            out,
            " Monte Carlo: {} draws, {:.1}% prefer high mitigation",
            mc.draw_count,
            mc.share_below_zero * 100.0
        );
    }
    out
}

pub fn render_sample_size(p: &SampleSizePayload) -> String {
    let mut out = format!(
        "Required sample size\n Max cost: {}\n Utilization: {}\n",
        p.required.max_cost, p.required.utilization
    );
    if let Some(v) = &p.validation {
        for c in &v.counts {
            let _ = writeln!(out, " {} / {}: {} responses", c.plan_id, c.attribute_id, c.count);
        }
        for w in &v.warnings {
            let _ = writeln!(
                out,
                " Warning: {} / {} has {} responses; {} needs {}",
                w.plan_id, w.attribute_id, w.count, w.measurement, w.required
            );
        }
    }
    out
}
