//! Experiment configurations, built-in examples and run reports.

pub mod builtins;
pub mod config;
pub mod report;
pub mod run;

pub use builtins::{list_builtins, BuiltinInfo, BuiltinKind};
pub use config::{reference_page, ExperimentConfig, ExperimentKind, SourceSpec, Tolerances};
pub use report::{Check, Provenance, Relation, RunReport};
pub use run::{run, RunContext, SEED_ENV, VERSION};
