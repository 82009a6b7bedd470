//! Configuration, experiment orchestration and report output.

pub mod config;
pub mod runs;
pub mod stability;
pub mod validate;

pub use config::{parse_config, parse_config_str, Fault, RunConfig};
pub use stability::{run_stability_experiment, StabilityReport, StabilityRow};
pub use validate::{certificate_sweep, run_validation_suite, CertificateSweep, FamilyReport, ValidationReport};
