//! Configuration, sweeps and table emitters behind the command-line tool.

pub mod config;
pub mod sweep;
pub mod tables;
pub mod validate;

pub use config::{
    BpsMode, ChiTableConfig, Detection, ExperimentConfig, LengthSweep, Numerics, Physics, Preset,
    RateCurveConfig, Resolved, Scenario, SchemeSpec, ValidationConfig,
};
pub use sweep::{manifest_path, run_sweep, write_manifest, write_rows, write_rows_file, ResultRow, SweepOutput};
pub use tables::{emit_chi_table, emit_rate_curve, rate_curve, RatePoint};
pub use validate::{validate_model, ValidationReport};
