//! Global analysis constants and their layered overrides.
//!
//! Resolution order, lowest to highest precedence: built-in defaults, a config
//! file (`--config` or `STRATEGIZER_CONFIG`), the `config` section of a plan
//! file, then per-request or command-line overrides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the default config file.
pub const CONFIG_ENV_VAR: &str = "STRATEGIZER_CONFIG";

macro_rules! analysis_config {
    ($( $(#[$doc:meta])* $field:ident : $ty:ty = $default:expr ),+ $(,)?) => {
        /// Global constants shared by every analysis.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct AnalysisConfig {
            $( $(#[$doc])* pub $field: $ty, )+
        }

        impl Default for AnalysisConfig {
            fn default() -> Self {
                Self { $( $field: $default, )+ }
            }
        }

        /// A sparse set of overrides; absent fields leave the base untouched.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct ConfigOverrides {
            $(
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )+
        }

        impl AnalysisConfig {
            /// Applies `overrides` on top of `self`.
            pub fn with_overrides(mut self, overrides: &ConfigOverrides) -> Self {
                $(
                    if let Some(v) = &overrides.$field {
                        self.$field = v.clone();
                    }
                )+
                self
            }
        }

        impl ConfigOverrides {
            /// Layers `top` over `self`: fields set in `top` win.
            pub fn merged(mut self, top: &ConfigOverrides) -> Self {
                $(
                    if top.$field.is_some() {
                        self.$field = top.$field.clone();
                    }
                )+
                self
            }
        }
    };
}

analysis_config! {
    /// Domain lower limit L shared by cost, quality and risk scales.
    lower: f64 = 1.0,
    /// Domain upper limit H.
    upper: f64 = 5.0,
    /// Maximum quality scaling factor W_q.
    w_q: f64 = 2.0,
    /// Cost scaling factor W_c.
    w_c: f64 = 2.0,
    /// Reference cost used to anchor every cost fit.
    c_ref: f64 = 1.2,
    /// Nominal convergence constant of the unit quality curve.
    k_q_nominal: f64 = 2.078,
    /// Highest monthly cost offered to respondents.
    max_possible_cost: f64 = 35.0,
    /// Longest operational lifespan offered to respondents (infrastructure only).
    max_possible_lifespan: Option<f64> = None,
    /// Households in the community; default Monte Carlo draw count.
    households: u64 = 5400,
    hurwicz_alpha: f64 = 0.5,
    sweep_increment: f64 = 0.02,
    fit_tolerance: f64 = 1e-9,
    seed: u64 = 0,
    /// Pilot sample size; the Student-t quantile uses `pilot_n - 1` degrees of freedom.
    pilot_n: u64 = 12,
    /// Truncated-normal rejection attempts per variable per draw.
    resample_limit: u32 = 1000,
    histogram_bins: usize = 50,
    /// Weight applied to the risk-mitigation utility in infrastructure comparisons.
    risk_weight: f64 = 2.0,
    /// Tolerance on |R - C|, relative to the domain width.
    infra_tie_tolerance: f64 = 1e-6,
    sample_confidence: f64 = 0.95,
    /// Range of costs assumed to hold almost every answer when estimating s.
    survey_cost_range: f64 = 30.0,
    cost_interval_width: f64 = 1.0,
    utilization_interval_width: f64 = 0.25,
}

impl AnalysisConfig {
    pub fn domain_width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("lower", self.lower),
            ("upper", self.upper),
            ("w_q", self.w_q),
            ("w_c", self.w_c),
            ("c_ref", self.c_ref),
            ("k_q_nominal", self.k_q_nominal),
            ("max_possible_cost", self.max_possible_cost),
            ("hurwicz_alpha", self.hurwicz_alpha),
            ("sweep_increment", self.sweep_increment),
            ("fit_tolerance", self.fit_tolerance),
            ("risk_weight", self.risk_weight),
            ("infra_tie_tolerance", self.infra_tie_tolerance),
            ("sample_confidence", self.sample_confidence),
            ("survey_cost_range", self.survey_cost_range),
            ("cost_interval_width", self.cost_interval_width),
            ("utilization_interval_width", self.utilization_interval_width),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::validation(format!("config field `{name}` must be finite")));
        }
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::validation(msg.to_string()))
            }
        };
        check(self.lower < self.upper, "config requires lower < upper")?;
        check(self.w_c >= 1.0, "config requires w_c >= 1")?;
        check(self.w_q >= 1.0, "config requires w_q >= 1")?;
        check(
            self.lower <= self.c_ref && self.c_ref < self.upper,
            "config requires lower <= c_ref < upper",
        )?;
        check(self.k_q_nominal != 0.0, "config requires k_q_nominal != 0")?;
        check(self.max_possible_cost > 0.0, "config requires max_possible_cost > 0")?;
        if let Some(life) = self.max_possible_lifespan {
            check(
                life.is_finite() && life > 0.0,
                "config requires max_possible_lifespan > 0",
            )?;
        }
        check(
            (0.0..=1.0).contains(&self.hurwicz_alpha),
            "config requires 0 <= hurwicz_alpha <= 1",
        )?;
        check(
            self.sweep_increment > 0.0 && self.sweep_increment <= 0.5,
            "config requires 0 < sweep_increment <= 0.5",
        )?;
        check(self.fit_tolerance > 0.0, "config requires fit_tolerance > 0")?;
        check(self.infra_tie_tolerance > 0.0, "config requires infra_tie_tolerance > 0")?;
        check(self.pilot_n >= 2, "config requires pilot_n >= 2")?;
        check(self.resample_limit >= 1, "config requires resample_limit >= 1")?;
        check(self.histogram_bins >= 1, "config requires histogram_bins >= 1")?;
        check(self.risk_weight >= 1.0, "config requires risk_weight >= 1")?;
        check(
            self.sample_confidence > 0.0 && self.sample_confidence < 1.0,
            "config requires 0 < sample_confidence < 1",
        )?;
        check(
            self.survey_cost_range >= 0.0
                && self.cost_interval_width > 0.0
                && self.utilization_interval_width > 0.0,
            "config requires nonnegative survey_cost_range and positive interval widths",
        )?;
        Ok(())
    }

    /// Resolves defaults + file layers + top-level overrides and validates.
    pub fn resolve(layers: &[&ConfigOverrides]) -> Result<Self> {
        let cfg = layers
            .iter()
            .fold(AnalysisConfig::default(), |cfg, layer| cfg.with_overrides(layer));
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a JSON config file body into overrides.
pub fn parse_config_overrides(json: &str) -> Result<ConfigOverrides> {
    let de = &mut serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })
}
