use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "criterion")]
pub enum Criterion {
    ExpectedUtility,
    Maximin,
    Maximax,
    MinimaxRegret,
    MostLikelihood,
    Hurwicz { alpha: f64 },
}

impl Criterion {
    pub fn all(alpha: f64) -> [Criterion; 6] {
        [
            Criterion::ExpectedUtility,
            Criterion::Maximin,
            Criterion::Maximax,
            Criterion::MinimaxRegret,
            Criterion::MostLikelihood,
            Criterion::Hurwicz { alpha },
        ]
    }

    pub fn label(&self) -> &'static str {
        match self {
            Criterion::ExpectedUtility => "Expected utility",
            Criterion::Maximin => "Maximin",
            Criterion::Maximax => "Maximax",
            Criterion::MinimaxRegret => "Minimax regret",
            Criterion::MostLikelihood => "Most likelihood",
            Criterion::Hurwicz { .. } => "Hurwicz",
        }
    }

    /// Lower scores win for minimax regret; higher for everything else.
    pub fn minimizes(&self) -> bool {
        matches!(self, Criterion::MinimaxRegret)
    }
}

/// The winning plan under one criterion and the score that won.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub plan_id: String,
    pub plan_index: usize,
    /// Utility for most criteria; the worst-case regret for minimax regret.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaOutcome {
    pub expected_utility: CriterionOutcome,
    pub maximin: CriterionOutcome,
    pub maximax: CriterionOutcome,
    pub minimax_regret: CriterionOutcome,
    pub most_likelihood: CriterionOutcome,
    pub hurwicz: CriterionOutcome,
    pub hurwicz_alpha: f64,
}

impl CriteriaOutcome {
    pub fn get(&self, criterion: Criterion) -> &CriterionOutcome {
        match criterion {
            Criterion::ExpectedUtility => &self.expected_utility,
            Criterion::Maximin => &self.maximin,
            Criterion::Maximax => &self.maximax,
            Criterion::MinimaxRegret => &self.minimax_regret,
            Criterion::MostLikelihood => &self.most_likelihood,
            Criterion::Hurwicz { .. } => &self.hurwicz,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Criterion, &CriterionOutcome)> {
        Criterion::all(self.hurwicz_alpha)
            .into_iter()
            .map(move |c| (c, self.get(c)))
    }
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// Picks the best score; exact ties go to a scenario-wise dominating
/// challenger, otherwise to the earliest plan.
fn select<U: AsRef<[f64]>>(scores: &[f64], utilities: &[U], minimize: bool) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        let better = if minimize {
            scores[i] < scores[best]
        } else {
            scores[i] > scores[best]
        };
        if better
            || (scores[i] == scores[best]
                && dominates(utilities[i].as_ref(), utilities[best].as_ref()))
        {
            best = i;
        }
    }
    best
}

/// Probability-weighted sum; monotone in every utility under rounding.
pub fn weighted_sum(probabilities: &[f64], utilities: &[f64]) -> f64 {
    probabilities.iter().zip(utilities).map(|(p, u)| p * u).sum()
}

/// Scores of every plan under one criterion.
pub fn criterion_scores<U: AsRef<[f64]>, P: AsRef<[f64]>>(
    criterion: Criterion,
    utilities: &[U],
    probabilities: &[P],
) -> Vec<f64> {
    let min = |u: &[f64]| u.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |u: &[f64]| u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match criterion {
        Criterion::ExpectedUtility => utilities
            .iter()
            .zip(probabilities)
            .map(|(u, p)| weighted_sum(p.as_ref(), u.as_ref()))
            .collect(),
        Criterion::Maximin => utilities.iter().map(|u| min(u.as_ref())).collect(),
        Criterion::Maximax => utilities.iter().map(|u| max(u.as_ref())).collect(),
        Criterion::MinimaxRegret => {
            let n = utilities[0].as_ref().len();
            let best: Vec<f64> = (0..n)
                .map(|s| {
                    utilities
                        .iter()
                        .map(|u| u.as_ref()[s])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            utilities
                .iter()
                .map(|u| {
                    u.as_ref()
                        .iter()
                        .zip(&best)
                        .map(|(x, b)| b - x)
                        .fold(0.0, f64::max)
                })
                .collect()
        }
        Criterion::MostLikelihood => utilities
            .iter()
            .zip(probabilities)
            .map(|(u, p)| {
                let p = p.as_ref();
                let mut likeliest = 0;
                for s in 1..p.len() {
                    if p[s] > p[likeliest] {
                        likeliest = s;
                    }
                }
                u.as_ref()[likeliest]
            })
            .collect(),
        Criterion::Hurwicz { alpha } => utilities
            .iter()
            .map(|u| alpha * max(u.as_ref()) + (1.0 - alpha) * min(u.as_ref()))
            .collect(),
    }
}

/// Applies every criterion to per-plan scenario utilities and probabilities.
pub fn apply_decision_criteria<S: AsRef<str>, U: AsRef<[f64]>, P: AsRef<[f64]>>(
    plan_ids: &[S],
    utilities: &[U],
    probabilities: &[P],
    alpha: f64,
) -> Result<CriteriaOutcome> {
    if plan_ids.is_empty() {
        return Err(Error::validation("at least one plan is required"));
    }
    if utilities.len() != plan_ids.len() || probabilities.len() != plan_ids.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} plans, {} utility rows, {} probability rows",
            plan_ids.len(),
            utilities.len(),
            probabilities.len()
        )));
    }
    let n = utilities[0].as_ref().len();
    if n == 0 {
        return Err(Error::ShapeMismatch("no scenarios".into()));
    }
    for (i, (u, p)) in utilities.iter().zip(probabilities).enumerate() {
        if u.as_ref().len() != n || p.as_ref().len() != n {
            return Err(Error::ShapeMismatch(format!(
                "plan `{}` has {} utilities and {} probabilities, expected {n}",
                plan_ids[i].as_ref(),
                u.as_ref().len(),
                p.as_ref().len()
            )));
        }
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("Hurwicz alpha {alpha} outside [0, 1]")));
    }
    let outcome = |c: Criterion| {
        let scores = criterion_scores(c, utilities, probabilities);
        let i = select(&scores, utilities, c.minimizes());
        CriterionOutcome {
            plan_id: plan_ids[i].as_ref().to_string(),
            plan_index: i,
            value: scores[i],
        }
    };
    Ok(CriteriaOutcome {
        expected_utility: outcome(Criterion::ExpectedUtility),
        maximin: outcome(Criterion::Maximin),
        maximax: outcome(Criterion::Maximax),
        minimax_regret: outcome(Criterion::MinimaxRegret),
        most_likelihood: outcome(Criterion::MostLikelihood),
        hurwicz: outcome(Criterion::Hurwicz { alpha }),
        hurwicz_alpha: alpha,
    })
}
