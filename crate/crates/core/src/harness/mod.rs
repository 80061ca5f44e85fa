//! Experiment runners, CSV output and SVG plots.

mod config;
mod csv_out;
mod plot;
mod sweeps;
mod toy;
mod train;

pub use csv_out::{
    check_header, read_eval_rows, read_noise_rows, read_raw, read_step_log, read_toy_points, write_eval_rows,
    write_noise_rows, write_step_log, write_toy_points, write_toy_summary, Fields, Table, ToyPointRow, SCHEMA_VERSION,
};
pub use plot::{emit_plots, PlotFile, PlotKind};
pub use config::{DatasetKind, ExperimentConfig, SslTarget, WeightingMode};
pub use sweeps::{
    mean_over, run_alpha_sensitivity, run_cells, run_noise_tolerance_sweep, run_spcr_robustness_sweep,
    run_ssl_ablation, sort_rows, Cell, EvalRow, NoiseRow, NoiseSweep,
};
pub use toy::{
    run_toy_experiment, run_toy_seeds, target_direction, toy_alignment, train_toy_arm, ToyArm, ToyModel, ToyOutcome,
    ToyPoint, ToyTrainConfig,
};
pub use train::{make_datasets, sample_indices, train_on, train_unida, train_unida_with_model, RunRecord, StepLog};
