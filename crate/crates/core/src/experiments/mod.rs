//! End-to-end studies driven by a flat `key = value` configuration.

pub mod config;
pub mod output;
pub mod studies;

pub use config::{parse_config, parse_config_str, parse_partition, FProfile, FamilySpec, StudyConfig};
pub use output::{emit_results, sweep_csv, SWEEP_HEADER, version_string, write_output, Envelope, OutputFormat};
pub use studies::*;
