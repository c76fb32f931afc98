//! SQUARE: a uniform sample of the whole stream.

use crate::error::{check_quantile, Error, Result};
use crate::oracle::exact_quantile;
use crate::rng::{seeded, StreamRng, SALT_RESERVOIR};
use crate::sampling::{Reservoir, SamplingMode};
use crate::types::{ItemId, ProblemConfig, QueryAnswer, StreamElement};

use super::{square_capacity, Estimator, Sizing};

#[derive(Debug, Clone)]
pub struct SquareEstimator {
    reservoir: Reservoir<StreamElement, StreamRng>,
}

impl SquareEstimator {
    pub fn new(cfg: &ProblemConfig, sizing: &Sizing) -> Result<Self> {
        let m = square_capacity(cfg, sizing.c_m)?;
        Ok(Self::with_capacity(m, sizing.sampling, cfg.seed))
    }

    pub fn with_capacity(m: usize, mode: SamplingMode, seed: u64) -> Self {
        SquareEstimator { reservoir: Reservoir::new(m, mode, seeded(seed, SALT_RESERVOIR)) }
    }

    /// The sample size `M`.
    pub fn capacity(&self) -> usize {
        self.reservoir.capacity()
    }

    pub fn reservoir(&self) -> &Reservoir<StreamElement, StreamRng> {
        &self.reservoir
    }
}

impl Estimator for SquareEstimator {
    fn name(&self) -> &'static str {
        "square"
    }

    fn insert(&mut self, element: StreamElement) {
        self.reservoir.offer(element);
    }

    fn query(&self, id: ItemId, q: f64) -> Result<QueryAnswer> {
        check_quantile(q)?;
        let n = self.reservoir.seen();
        if n == 0 {
            return Err(Error::Empty);
        }
        let samples = self.reservoir.collect_all(id);
        let s = samples.len() as f64;
        let m = self.reservoir.capacity() as u64;
        let freq = if n > m { s * n as f64 / m as f64 } else { s };
        if samples.is_empty() {
            return Ok(QueryAnswer::unmonitored(0.0));
        }
        Ok(QueryAnswer::monitored(freq, exact_quantile(&samples, q)?))
    }

    fn footprint(&self) -> usize {
        self.reservoir.len()
    }

    fn footprint_bytes(&self) -> usize {
        self.reservoir.len() * std::mem::size_of::<StreamElement>()
    }

    fn elements_seen(&self) -> u64 {
        self.reservoir.seen()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(id: u64, v: f64) -> StreamElement {
        StreamElement::new(id, v).unwrap()
    }

    #[test]
    fn full_retention_is_exact() {
        let mut e = SquareEstimator::with_capacity(100, SamplingMode::SkipL, 3);
        for i in 0..50 {
            e.insert(el(i % 3, i as f64));
        }
        assert_eq!(e.footprint(), 50);
        let a = e.query(ItemId(0), 0.5).unwrap();
        assert_eq!(a.freq_estimate, 17.0);
        assert!(a.monitored);
        assert_eq!(e.query(ItemId(9), 0.5).unwrap(), QueryAnswer::unmonitored(0.0));
    }

    #[test]
    fn footprint_caps_at_m() {
        let mut e = SquareEstimator::with_capacity(10, SamplingMode::Naive, 3);
        assert_eq!(e.footprint(), 0);
        for i in 0..1000 {
            e.insert(el(i % 5, 1.0));
        }
        assert_eq!(e.footprint(), 10);
        assert_eq!(e.elements_seen(), 1000);
    }

    #[test]
    fn empty_and_bad_q() {
        let mut e = SquareEstimator::with_capacity(10, SamplingMode::Naive, 3);
        assert!(matches!(e.query(ItemId(1), 0.5), Err(Error::Empty)));
        e.insert(el(1, 1.0));
        assert!(matches!(e.query(ItemId(1), 1.5), Err(Error::InvalidQuantile(_))));
    }
}
