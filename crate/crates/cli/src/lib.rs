//! Config-driven experiment runner: TOML experiment files, named instances,
//! CSV artifacts stamped with the spec hash.

pub mod catalog;
pub mod config;
pub mod report;
pub mod run;

pub use catalog::{list_instances, CatalogEntry};
pub use config::{ExperimentKind, ExperimentSpec, ValidationError};
pub use report::{CheckRow, Comparison, RunReport};
pub use run::{run, RunError};

/// Environment variable that overrides the output directory of a spec.
pub const OUT_DIR_ENV: &str = "COARSELAB_OUT";
