//! Spec parsing, task execution, report emission and the command-line
//! driver of `strongweights`.

pub mod cli;
pub mod report;
pub mod spec;
pub mod tasks;

pub use cli::run;
pub use report::{to_canonical_json, verdicts_to_csv, Report};
pub use spec::{parse_spec, InstanceSpec};
