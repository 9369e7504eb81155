//! Experiment orchestration: configs, seeded trials, traces, summaries,
//! plots and the geometric check suite.

pub mod config;
pub mod experiment;
pub mod lowerbound;
pub mod plot;
pub mod verify;

pub use config::{EnvironmentConfig, ExperimentConfig, GameKind};
pub use experiment::{
    fmt_sig, mean_trace, run_experiment, run_sweep, run_trial, run_trials, Outputs, RegretTrace, Summary, SweepPoint,
    TraceRow, CSV_HEADER,
};
pub use lowerbound::{run_lowerbound_study, shipped_learners, LowerBoundStudy, StudyRow};
pub use plot::{emit_plot, render_svg};
pub use verify::{random_polytope, run_lemma_suite, Budget, Lemma, LemmaResult, VerifyConfig};
