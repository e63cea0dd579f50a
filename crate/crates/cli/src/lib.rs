//! Front-end for the `unitroot` binary: model files, the analysis pipeline
//! and JSON reports.

pub mod analysis;
pub mod commands;
pub mod error;
pub mod model;
pub mod real;
pub mod report;

pub use analysis::{analyze, Options};
pub use error::CliError;
pub use model::ModelFile;
pub use report::AnalysisReport;
