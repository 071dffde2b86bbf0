//! Precision/recall experiments over range queries.

mod config;
mod experiment;

pub use config::{Dataset, ExperimentConfig, Settings, WorkloadSpec};
pub use experiment::{
    emit_plot_data, ground_truth, run_experiment, ExperimentReport, Phase, ReportRow, Workload,
    ALPHA_PLOT_FILE, PHASE_PLOT_FILE, PLOT_COLUMNS, REPORT_COLUMNS,
};
