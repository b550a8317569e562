//! Error measurement, refinement studies and acceptance checks.

pub mod checks;
pub mod errors;
pub mod infsup;
pub mod study;

pub use checks::{check_report, Check};
pub use errors::{compute_errors, eoc, l2_norm, ErrorSet};
pub use infsup::{estimate_infsup, InfSup};
pub use study::{run_study, solve_level, ConvergenceReport, EocSet, ReportRow, StudyConfig, StudyKind};
