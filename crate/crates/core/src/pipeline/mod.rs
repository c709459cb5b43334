//! JSON-configured batch runs: validation, staged execution, manifest with checksums.

mod config;
mod io;
mod run;

pub use config::{
    hash_json, resolve_output_dir, validate, BranchStage, Diagnostic, DispersionStage, EntropyConfig, GasConfig, L0Stage, RunConfig,
    Stages, SynthStage, SynthTerm, Tolerances, DEFAULT_OUT_DIR, OUT_DIR_ENV,
};
pub use io::{
    read_mode_csv, read_mode_index, render, write_file, write_fixed_point_csv, write_profile_csv, write_roots_csv, FileRecord, ModeSamples,
};
pub use run::{
    equilibrium_summary, linspace, periodic_grid, run, run_in, CheckRecord, CrossPair, CrossValidation, RunManifest, StageReport, StageStatus,
    MANIFEST_FILE, PROFILE_TABLE_INTERVALS,
};
