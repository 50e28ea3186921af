//! Configuration-driven experiment harness: accuracy and applicability
//! sweeps, timing sweeps and robustness counting, with CSV, markdown and
//! JSON reports.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{
    preset, ExperimentConfig, ExperimentKind, OutputSettings, Overrides, SketchSettings, Sweep, SweepAxis,
    SweepPoint, TimingSettings, PRESET_NAMES,
};
pub use report::{emit, emit_report, to_csv, to_markdown, CellSummary, ExperimentReport, ReportFormat, TrialRecord, CSV_HEADER};
pub use runner::{
    matrix_seed, run_accuracy_sweep, run_experiment, run_robustness_suite, run_timing_sweep, trial_seed,
    write_outputs,
};
