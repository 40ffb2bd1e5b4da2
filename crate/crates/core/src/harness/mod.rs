//! JSON-configured experiments with a JSON report and CSV tables.
//!
//! Outputs go to a directory: `report.json` always, `profiles.csv` for
//! experiments with per-node or per-sample tables, `sweep.csv` for sweeps.
//! The exit status is 0 when every certificate passes, 1 otherwise, and 2
//! for configuration errors (in which case nothing is written).

mod config;
mod report;
mod run;

pub use config::{
    ExperimentConfig, ExperimentKind, GeometryConfig, ParamsConfig, PlantedConfig, SweepAxis,
    SweepConfig,
};
pub use report::{strip_timestamp, CertificateRecord, Report, Table};
pub use run::{
    execute, r_sweep_constants, run_experiment, Outcome, CLOSED_FORM_TOLERANCE, QUADRATURE_TOLERANCE,
    RATE_SLACK, RECOVERY_TOLERANCE, R_SPREAD, R_SWEEP,
};

/// Exit status for a configuration error.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when some certificate fails.
pub const EXIT_FAILURE: i32 = 1;
