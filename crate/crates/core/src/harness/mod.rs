//! Experiment runner: empirical metastability ranks, bound and realizer
//! cross-checks, sunny-retraction checks and machine-readable reports.

pub mod config;
pub mod experiment;
pub mod gspec;
pub mod limsup;
pub mod sunny;
pub mod verify;

pub use config::{load_config, parse_config, ConfigError, Experiment, ExperimentConfig, Scheme};
pub use experiment::{
    export_report, export_reports, import_csv, import_report_json, run_experiment, Check, CsvRow, Format, HarnessError,
    MetastabilityReport, Outcome, CSV_COLUMNS, FUEL_EXCEEDED,
};
pub use gspec::GSpec;
pub use limsup::{limsup_batch, LimsupBatch};
pub use sunny::{affine_fix_projection, check_sunny, SunnyReport};
pub use verify::{least_endpoint_rank, verify_metastability};
