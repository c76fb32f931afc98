//! Acceptance criteria for the estimators, each returning a pass/fail
//! outcome with the measured numbers.

pub mod criteria;
pub mod stats;

pub use criteria::Outcome;
