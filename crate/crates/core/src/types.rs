//! Domain types shared by every estimator.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Opaque item identifier. Trace loaders hash string ids into this space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for ItemId {
    fn from(v: u64) -> Self {
        ItemId(v)
    }
}

/// A finite, non-negative latency. NaN, infinities and negative values are
/// rejected at construction, which gives the type a total order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[repr(transparent)]
pub struct Latency(f64);

impl Latency {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            // -0.0 passes the check above; fold it into +0.0 so that
            // equality and ordering agree.
            Ok(Latency(value + 0.0))
        } else {
            Err(Error::InvalidLatency(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for Latency {}

impl PartialOrd for Latency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Latency {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Latency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<f64> for Latency {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Latency::new(value)
    }
}

/// One `(id, latency)` observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamElement {
    pub id: ItemId,
    pub latency: Latency,
}

impl StreamElement {
    pub fn new(id: u64, latency: f64) -> Result<Self> {
        Ok(StreamElement {
            id: ItemId(id),
            latency: Latency::new(latency)?,
        })
    }
}

/// 1-based arrival position within a stream. Zero means "never".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const NEVER: Timestamp = Timestamp(0);
    /// Sentinel that sorts after every real arrival.
    pub const END: Timestamp = Timestamp(u64::MAX);
}

/// The `(theta, epsilon, delta)` triple plus the seed that drives every
/// randomized structure built from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConfig {
    pub theta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl ProblemConfig {
    pub fn new(theta: f64, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::param(format!("theta must lie in (0, 1], got {theta}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(ProblemConfig { theta, epsilon, delta, seed })
    }

    pub(crate) fn require_positive_delta(&self, who: &str) -> Result<()> {
        if self.delta > 0.0 {
            Ok(())
        } else {
            Err(Error::param(format!("{who} is randomized and needs delta > 0")))
        }
    }
}

/// Answer to a `(id, q)` query.
///
/// `quantile_estimate` is only ever present on monitored answers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryAnswer {
    pub freq_estimate: f64,
    pub quantile_estimate: Option<Latency>,
    pub monitored: bool,
}

impl QueryAnswer {
    pub fn monitored(freq_estimate: f64, quantile: Latency) -> Self {
        QueryAnswer {
            freq_estimate,
            quantile_estimate: Some(quantile),
            monitored: true,
        }
    }

    pub fn unmonitored(freq_estimate: f64) -> Self {
        QueryAnswer {
            freq_estimate,
            quantile_estimate: None,
            monitored: false,
        }
    }
}
