//! Per-item quantile estimators behind one interface.

mod filtered;
mod quasi;
mod squad;
mod square;

use std::fmt;
use std::str::FromStr;

pub use filtered::{convergence_n, FilteredEstimator};
pub use quasi::QuasiEstimator;
pub use squad::{SquadEntry, SquadEstimator, SquadPayload};
pub use square::SquareEstimator;

use crate::error::{Error, Result};
use crate::sampling::SamplingMode;
use crate::types::{ItemId, ProblemConfig, QueryAnswer, StreamElement};

pub trait Estimator {
    fn name(&self) -> &'static str;

    fn insert(&mut self, element: StreamElement);

    /// Frequency and `q`-quantile estimate for `id`.
    fn query(&self, id: ItemId, q: f64) -> Result<QueryAnswer>;

    /// Stored records: samples, sketch values and entry metadata.
    fn footprint(&self) -> usize;

    /// [`footprint`](Self::footprint) weighted by the in-memory size of each
    /// record type.
    fn footprint_bytes(&self) -> usize;

    /// Number of `insert` calls so far.
    fn elements_seen(&self) -> u64;
}

impl<E: Estimator + ?Sized> Estimator for Box<E> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn insert(&mut self, element: StreamElement) {
        (**self).insert(element)
    }
    fn query(&self, id: ItemId, q: f64) -> Result<QueryAnswer> {
        (**self).query(id, q)
    }
    fn footprint(&self) -> usize {
        (**self).footprint()
    }
    fn footprint_bytes(&self) -> usize {
        (**self).footprint_bytes()
    }
    fn elements_seen(&self) -> u64 {
        (**self).elements_seen()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Square,
    Quasi,
    Squad,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Square, EstimatorKind::Quasi, EstimatorKind::Squad];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Square => "square",
            EstimatorKind::Quasi => "quasi",
            EstimatorKind::Squad => "squad",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(EstimatorKind::Square),
            "quasi" => Ok(EstimatorKind::Quasi),
            "squad" => Ok(EstimatorKind::Squad),
            _ => Err(Error::param(format!("unknown algorithm {s:?} (expected square, quasi or squad)"))),
        }
    }
}

/// Constants and knobs that the asymptotic bounds leave open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizing {
    /// Multiplier on SQUARE's sample count.
    pub c_m: f64,
    /// Multiplier on SQUAD's reservoir size.
    pub c_z: f64,
    /// Independent Random sketches per SQUAD entry; answers take the median.
    pub repetitions: usize,
    pub sampling: SamplingMode,
}

impl Default for Sizing {
    fn default() -> Self {
        Sizing { c_m: 1.0, c_z: 1.0, repetitions: 1, sampling: SamplingMode::SkipL }
    }
}

impl Sizing {
    fn validate(&self) -> Result<()> {
        if !(self.c_m > 0.0 && self.c_m.is_finite()) {
            return Err(Error::param(format!("c_m must be positive, got {}", self.c_m)));
        }
        if !(self.c_z > 0.0 && self.c_z.is_finite()) {
            return Err(Error::param(format!("c_z must be positive, got {}", self.c_z)));
        }
        if self.repetitions == 0 {
            return Err(Error::param("repetitions must be at least 1"));
        }
        Ok(())
    }
}

pub(crate) fn ceil_count(x: f64) -> Result<usize> {
    if x.is_finite() && x >= 1.0 && x < usize::MAX as f64 {
        Ok(x.ceil() as usize)
    } else if x.is_finite() && x > 0.0 {
        Ok(1)
    } else {
        Err(Error::param(format!("capacity {x} is not representable")))
    }
}

/// SQUARE's sample count `M = ceil(c_m / (theta eps^2) * ln(2 / delta))`.
pub fn square_capacity(cfg: &ProblemConfig, c_m: f64) -> Result<usize> {
    cfg.require_positive_delta("SQUARE")?;
    ceil_count(c_m / (cfg.theta * cfg.epsilon.powi(2)) * (2.0 / cfg.delta).ln())
}

/// QUASI's entry count `k = ceil(2 / (eps theta))`.
pub fn quasi_capacity(cfg: &ProblemConfig) -> Result<usize> {
    ceil_count(2.0 / (cfg.epsilon * cfg.theta))
}

/// SQUAD's reservoir size `z = ceil(c_z / (theta eps^1.5) * ln(2 / delta))`.
pub fn squad_reservoir_capacity(cfg: &ProblemConfig, c_z: f64) -> Result<usize> {
    cfg.require_positive_delta("SQUAD")?;
    ceil_count(c_z / (cfg.theta * cfg.epsilon.powf(1.5)) * (2.0 / cfg.delta).ln())
}

/// SQUAD's entry count `m = ceil(4 / (sqrt(eps) theta))`.
pub fn squad_entry_capacity(cfg: &ProblemConfig) -> Result<usize> {
    ceil_count(4.0 / (cfg.epsilon.sqrt() * cfg.theta))
}

pub type BoxedEstimator = Box<dyn Estimator + Send>;

pub fn build(kind: EstimatorKind, cfg: &ProblemConfig, sizing: &Sizing) -> Result<BoxedEstimator> {
    sizing.validate()?;
    Ok(match kind {
        EstimatorKind::Square => Box::new(SquareEstimator::new(cfg, sizing)?),
        EstimatorKind::Quasi => Box::new(QuasiEstimator::new(cfg)?),
        EstimatorKind::Squad => Box::new(SquadEstimator::new(cfg, sizing)?),
    })
}

/// `kind` behind a pre-filter that forwards each element with probability
/// `p`; the inner estimator is sized for `(theta, alpha eps, alpha delta)`.
pub fn build_filtered(
    kind: EstimatorKind,
    cfg: &ProblemConfig,
    sizing: &Sizing,
    p: f64,
    alpha: f64,
) -> Result<FilteredEstimator<BoxedEstimator>> {
    let inner_cfg = FilteredEstimator::<BoxedEstimator>::inner_config(cfg, alpha)?;
    let inner = build(kind, &inner_cfg, sizing)?;
    FilteredEstimator::new(inner, p, alpha, cfg.seed)
}
