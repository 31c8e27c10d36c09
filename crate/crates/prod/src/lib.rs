//! Dataset production on top of `sarsim-core`.
//!
//! A [`ProductionConfig`] names the targets, the geometry sweep, the sensor
//! and the paradigms. [`plan_production`] expands it into jobs with stable
//! seeds, [`run_production`] renders them into chip files and a JSONL
//! manifest, and the remaining functions combine, compare and summarize
//! finished datasets.

mod compare;
mod config;
mod error;
mod manifest;
mod plan;
mod run;
mod summary;

pub use compare::{compare_chips, compare_files, Similarity};
pub use config::{
    AzimuthSweep, ErrorPolicy, Paradigm, ParadigmSelection, ProductionConfig, SensorSpec,
    TargetEntry, WORKERS_ENV,
};
pub use error::{ProdError, Result};
pub use manifest::{combine_datasets, ChipRecord, ErrorRecord, Manifest};
pub use plan::{azimuths, job_seed, plan_production, Job, Plan};
pub use run::{run_production, RunOptions, RunSummary};
pub use summary::{summarize, CoverageCell, MetricsReport};

pub const MANIFEST_NAME: &str = "manifest.jsonl";

/// Hex SHA-256 of `bytes`.
pub fn checksum(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
