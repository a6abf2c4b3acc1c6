//! Batch experiment runner: builds the kernel bank, runs SMKL, KGL or PMKL
//! over a parameter grid, and writes human- and machine-readable reports.

pub mod report;
pub mod runner;
pub mod spec;

pub use report::{emit_sweep_table, report_body, run_experiment, sweep_table, RunOutput};
pub use runner::{run_grid, Experiment, Point, PointResult};
pub use spec::{ExperimentSpec, KernelPick, MethodName, Mode};
