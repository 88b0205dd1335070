//! Ensembles over the initial phases: configuration, parallel execution,
//! statistics and output files.

mod config;
mod output;
mod run;

pub use config::{
    AtomLayout, DetectorSpec, EpochSpec, Experiment, GeometrySpec, GridSpec, ParamsSpec, RunConfig, SourceSpec,
    StageSpec, RUN_CONFIG_SCHEMA, SCHEMA_VERSION,
};
pub use output::{emit_delayed_choice, emit_results, Summary};
pub use run::{
    check_comparable, compare_delayed_choice, draw_winner, run_ensemble, run_one, run_seed, DelayedChoiceReport,
    EnsembleResult, RunRecord,
};
