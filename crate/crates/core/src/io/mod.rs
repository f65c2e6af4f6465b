//! Survey CSV ingestion, plan files, reports and their text rendering.

pub mod plan_file;
pub mod report;
pub mod survey_csv;
pub mod text;

pub use plan_file::{load_plan_file, parse_plan_file, InfraSection, PlanFile};
pub use report::{
    content_digest, DecisionReport, InputsDigest, ReportKind, ReportPayload,
};
pub use survey_csv::{load_survey_csv, parse_survey_csv, survey_csv_string, write_survey_csv};
