use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ConfigOverrides;
use crate::error::{Error, Result};
use crate::infra::InfraScenarioSpec;
use crate::plan::{PlanSpec, ScenarioTargets};

/// Which survey measurement feeds an infrastructure comparison, and the two
/// implementations being weighed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfraSection {
    pub plan_id: String,
    pub attribute_id: String,
    pub low_cost_low_mitigation: ScenarioTargets,
    pub high_cost_high_mitigation: ScenarioTargets,
}

impl InfraSection {
    pub fn scenarios(&self) -> InfraScenarioSpec {
        InfraScenarioSpec {
            low_cost_low_mitigation: self.low_cost_low_mitigation.clone(),
            high_cost_high_mitigation: self.high_cost_high_mitigation.clone(),
        }
    }
}

/// Plans, optional infrastructure comparison and config overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default)]
    pub plans: Vec<PlanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infrastructure: Option<InfraSection>,
    #[serde(default)]
    pub config: ConfigOverrides,
}

impl PlanFile {
    /// Structural checks that need no config: a nonempty plan list (unless
    /// the file only describes infrastructure) and unique plan ids.
    pub fn check(&self) -> Result<()> {
        if self.plans.is_empty() && self.infrastructure.is_none() {
            return Err(Error::Schema {
                path: "plans".into(),
                reason: "at least one plan is required".into(),
            });
        }
        let mut seen = HashSet::new();
        for (i, p) in self.plans.iter().enumerate() {
            if p.plan_id.is_empty() {
                return Err(Error::Schema {
                    path: format!("plans[{i}].plan_id"),
                    reason: "plan id must not be empty".into(),
                });
            }
            if !seen.insert(p.plan_id.as_str()) {
                return Err(Error::Schema {
                    path: format!("plans[{i}].plan_id"),
                    reason: format!("duplicate plan id `{}`", p.plan_id),
                });
            }
            if p.attributes.is_empty() {
                return Err(Error::Schema {
                    path: format!("plans[{i}].attributes"),
                    reason: "at least one attribute is required".into(),
                });
            }
        }
        Ok(())
    }

    pub fn plan(&self, plan_id: &str) -> Result<&PlanSpec> {
        self.plans
            .iter()
            .find(|p| p.plan_id == plan_id)
            .ok_or_else(|| Error::validation(format!("no plan named `{plan_id}`")))
    }
}

/// Deserializes JSON, reporting the path of the offending field.
pub fn from_json_with_path<T: serde::de::DeserializeOwned>(json: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema {
            path: if path == "." { String::new() } else { path },
            reason: e.into_inner().to_string(),
        }
    })
}

pub fn parse_plan_file(json: &str) -> Result<PlanFile> {
    let file: PlanFile = from_json_with_path(json)?;
    file.check()?;
    Ok(file)
}

pub fn load_plan_file(path: impl AsRef<Path>) -> Result<PlanFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_plan_file(&text)
}
