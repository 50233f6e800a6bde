//! Reading and writing the canonical scenario/prediction file formats, plus
//! the deterministic synthetic corpus generator.
//!
//! The canonical scenario format is UTF-8 line-delimited JSON: one scenario
//! record per line, fixed key order, schema-versioned. Prediction files use
//! the same framing with one record per (scenario, agent).

mod format;
mod synthetic;

pub use format::{
    parse_predictions, parse_scenarios, write_predictions, write_scenarios, SCHEMA_VERSION,
};
pub use synthetic::{
    add_noise, generate_scenario, generate_synthetic, scenario_seed, ManeuverKind, SyntheticConfig,
};

use crate::scenario::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("PARSE_ERROR at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("VALIDATION_ERROR at line {line} (scenario {scenario_id}): {report}")]
    Validation {
        line: usize,
        scenario_id: String,
        report: ValidationReport,
    },
    #[error("IO_ERROR on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CONFIG_ERROR: {0}")]
    Config(String),
}
