//! Scenario configuration, power sweeps, CSV output and self-validation.

pub mod config;
pub mod output;
pub mod sweep;
pub mod validate;

pub use config::{load_config, parse_config, RateUnits, ScenarioConfig, Scheme};
pub use output::{emit_plotdata, read_csv, write_csv};
pub use sweep::{sweep, tau_search, RowFailure, SweepOutcome, SweepRow};
pub use validate::{validate, validate_with, ValidateOptions, ValidationReport};
