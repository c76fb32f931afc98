//! QUASI: Space Saving with a GK sketch per monitored item.

use crate::error::{check_quantile, Error, Result};
use crate::heavy_hitters::{SpaceSaving, Touch};
use crate::sketch::{GkSketch, GkTuple};
use crate::types::{ItemId, ProblemConfig, QueryAnswer, StreamElement};

use super::{quasi_capacity, Estimator};

#[derive(Debug, Clone)]
pub struct QuasiEstimator {
    table: SpaceSaving<GkSketch>,
    eps_gk: f64,
    n: u64,
}

impl QuasiEstimator {
    /// `k = ceil(2 / (eps theta))` entries, each with a GK sketch at `eps / 2`.
    pub fn new(cfg: &ProblemConfig) -> Result<Self> {
        Self::with_capacity(quasi_capacity(cfg)?, cfg.epsilon / 2.0)
    }

    pub fn with_capacity(k: usize, eps_gk: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("QUASI needs at least one entry"));
        }
        GkSketch::new(eps_gk)?;
        Ok(QuasiEstimator { table: SpaceSaving::new(k), eps_gk, n: 0 })
    }

    pub fn eps_gk(&self) -> f64 {
        self.eps_gk
    }

    pub fn table(&self) -> &SpaceSaving<GkSketch> {
        &self.table
    }

    pub fn sketch_of(&self, id: ItemId) -> Option<&GkSketch> {
        self.table.get(id).map(|e| &e.payload)
    }
}

impl Estimator for QuasiEstimator {
    fn name(&self) -> &'static str {
        "quasi"
    }

    fn insert(&mut self, element: StreamElement) {
        self.n += 1;
        let eps = self.eps_gk;
        let (touch, entry) = self
            .table
            .touch(element.id, || GkSketch::new(eps).expect("validated at construction"));
        if let Touch::Evicted { .. } = touch {
            entry.payload.reset();
        }
        entry.payload.insert(element.latency);
    }

    fn query(&self, id: ItemId, q: f64) -> Result<QueryAnswer> {
        check_quantile(q)?;
        if self.n == 0 {
            return Err(Error::Empty);
        }
        match self.table.get(id) {
            Some(e) => Ok(QueryAnswer::monitored(e.count() as f64, e.payload.quantile(q)?)),
            None => Ok(QueryAnswer::unmonitored(self.table.min_count() as f64)),
        }
    }

    fn footprint(&self) -> usize {
        self.table.len() + self.table.footprint(GkSketch::stored_count)
    }

    fn footprint_bytes(&self) -> usize {
        let entry = std::mem::size_of::<ItemId>() + std::mem::size_of::<u64>();
        self.table.len() * entry
            + self.table.footprint(GkSketch::stored_count) * std::mem::size_of::<GkTuple>()
    }

    fn elements_seen(&self) -> u64 {
        self.n
    }
}
