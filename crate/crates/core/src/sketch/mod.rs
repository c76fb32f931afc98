//! Single-stream quantile summaries used as per-entry payloads.

mod gk;
mod random;

pub use gk::{GkSketch, GkTuple};
pub use random::{buffer_capacity, RandomSketch, WeightedQuantiles};

use crate::error::Result;
use crate::rng::StreamRng;
use crate::types::Latency;

/// Common surface of the two sketches.
pub trait QuantileSketch {
    fn insert(&mut self, value: Latency);
    fn quantile(&self, q: f64) -> Result<Latency>;
    fn reset(&mut self);
    fn count(&self) -> u64;
    fn stored_count(&self) -> usize;
}

impl QuantileSketch for GkSketch {
    fn insert(&mut self, value: Latency) {
        GkSketch::insert(self, value)
    }
    fn quantile(&self, q: f64) -> Result<Latency> {
        GkSketch::quantile(self, q)
    }
    fn reset(&mut self) {
        GkSketch::reset(self)
    }
    fn count(&self) -> u64 {
        GkSketch::count(self)
    }
    fn stored_count(&self) -> usize {
        GkSketch::stored_count(self)
    }
}

impl QuantileSketch for RandomSketch {
    fn insert(&mut self, value: Latency) {
        RandomSketch::insert(self, value)
    }
    fn quantile(&self, q: f64) -> Result<Latency> {
        RandomSketch::quantile(self, q)
    }
    fn reset(&mut self) {
        RandomSketch::reset(self)
    }
    fn count(&self) -> u64 {
        RandomSketch::count(self)
    }
    fn stored_count(&self) -> usize {
        RandomSketch::stored_count(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantileSketchKind {
    Gk { eps: f64 },
    Random { eps: f64 },
}

impl QuantileSketchKind {
    pub fn eps(self) -> f64 {
        match self {
            QuantileSketchKind::Gk { eps } | QuantileSketchKind::Random { eps } => eps,
        }
    }

    /// Builds a boxed sketch; `rng` is only consumed by the randomized kind.
    pub fn build(self, rng: StreamRng) -> Result<Box<dyn QuantileSketch + Send>> {
        Ok(match self {
            QuantileSketchKind::Gk { eps } => Box::new(GkSketch::new(eps)?),
            QuantileSketchKind::Random { eps } => Box::new(RandomSketch::new(eps, rng)?),
        })
    }
}
