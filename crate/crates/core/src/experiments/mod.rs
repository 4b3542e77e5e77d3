//! Experiment harness: adiabatic-invariant scans, training and rollout
//! protocols, configuration parsing and SVG charts.

mod adiabatic;
mod config;
mod protocols;
pub mod svg;

pub use adiabatic::{
    burn_in, drift_file_name, drift_series, n_epsilon, run_adiabatic_scan, write_scan, AdiabaticScanConfig, DriftSeries, NEpsilon,
    ScanResult, ScanRow,
};
pub use config::{config_hash, parse_config};
pub use protocols::{
    check_model, default_modes, initial_model, rollout_compare, run_adiabatic_scan_protocol, run_baseline, run_check_symplectic,
    run_generate_data, run_rollout, run_train, write_manifest, Band, BaselineConfig, CheckSymplecticConfig, ComparedBands, DataConfig,
    DataSource, ModelConfig, ReferenceConfig, RolloutConfig, RolloutSummary, RunManifest, SymplecticReport, TrainRunConfig,
    TrajectorySummary,
};
