//! Experiment runner: plans, parallel trial execution, aggregation and
//! result files.

pub mod plan;
pub mod results;
pub mod run;

pub use plan::{Cell, ExperimentPlan, Format, PlanDraft, PlanParams, Task, XSpec};
pub use results::{
    aggregate, execute_plan, read_csv_aggregates, read_csv_rows, read_json, write_results,
    AggregateStats, JsonResults, TrialRow, SCHEMA_VERSION,
};
pub use run::{
    census_is_exact, oracle, run_cell_trial, run_plan, worker_count, Probe, StackProbe, TrialRecord,
    WORKERS_ENV,
};
