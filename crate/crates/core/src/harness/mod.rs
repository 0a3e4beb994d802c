//! Experiment runner: builds a family, analyzes every member and the limit,
//! and writes documents, a summary table and SVG plots.

pub mod config;
pub mod plots;
pub mod run;

pub use config::{
    ExperimentConfig, GhSetting, GhSettings, GraphSettings, ProbeSettings, EXPERIMENT_SCHEMA,
    PRESET_NAMES,
};
pub use run::{emit_plots, run_experiment, write_summary, ArtifactSet, Manifest, PlotOutcome, SpaceArtifacts, MANIFEST_SCHEMA};
