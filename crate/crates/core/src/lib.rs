//! Per-item latency quantiles over heavy hitters in a stream.

pub mod error;
pub mod estimators;
pub mod heavy_hitters;
pub mod oracle;
pub mod rng;
pub mod sampling;
pub mod sketch;
pub mod types;
pub mod workload;

pub use estimators::{build, build_filtered, Estimator, EstimatorKind, Sizing};
pub use error::{Error, Result};
pub use oracle::{exact_quantile, exact_rank, percentage_error, ExactOracle, SortedLatencies};
pub use types::{ItemId, Latency, ProblemConfig, QueryAnswer, StreamElement, Timestamp};
