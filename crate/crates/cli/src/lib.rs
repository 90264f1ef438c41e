//! Batch planning, run manifests, reports and the replanning HTTP service built on
//! `baffle-core`.

pub mod fixtures;
pub mod pipeline;
pub mod plan;
pub mod report;
pub mod service;

pub use pipeline::{run_pipeline, PipelineError, PlanInputs, PlanOutputs, Stage, Tolerances};
pub use plan::{cmd_plan, load_plan, PlanConfig, RunManifest};
pub use report::{cmd_report, ReportSummary};
