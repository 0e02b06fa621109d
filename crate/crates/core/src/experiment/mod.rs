//! Experiment configs, run orchestration and output files.

mod config;
mod run;

pub use config::{parse_entries, ExperimentConfig};
pub use run::{
    read_operator, run, spectrum_csv, Artifact, Command, OperatorName, RunManifest, RunOutcome, StageTiming,
};
