pub mod analysis;
pub mod api;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod infra;
pub mod io;
pub mod plan;
pub mod survey;
pub mod utility;

pub use config::{AnalysisConfig, ConfigOverrides};
pub use error::{Error, Result};
