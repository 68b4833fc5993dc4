//! Experiment harness for `cauchy-core`: configuration, end-to-end
//! pipelines (simulate, perturb, reconstruct, identify), noise sweeps and
//! report and plot emission.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod plots;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{BenchError, Stage};
pub use pipeline::{run_pipeline, run_stages, simulate, sweep, Method, PipelineOutput, Stages, SweepOutput};
pub use plots::emit_plots;
pub use report::{RunReport, Timings};
