//! Accuracy, footprint and throughput harness for the estimators in
//! `hhq-core`.

pub mod compare;
pub mod report;
pub mod run;
pub mod sweep;

pub use report::{parse_report, ParsedReport, Row, RunReport};
pub use run::{run, run_with_oracle, Filter, RunConfig};
pub use sweep::{sweep, sweep_csv, SweepConfig, SweepRow};
