//! SQUAD: a timestamped reservoir for each item's history before it became
//! monitored, plus Space Saving entries carrying a Random sketch of
//! everything since.

use rand::SeedableRng;

use crate::error::{check_quantile, Error, Result};
use crate::heavy_hitters::{SpaceSaving, Touch};
use crate::rng::{seeded, StreamRng, SALT_RESERVOIR, SALT_SKETCH};
use crate::sampling::{Reservoir, SamplingMode, TimedSample};
use crate::sketch::RandomSketch;
use crate::types::{ItemId, Latency, ProblemConfig, QueryAnswer, StreamElement, Timestamp};

use super::{squad_entry_capacity, squad_reservoir_capacity, Estimator, Sizing};

#[derive(Debug, Clone)]
pub struct SquadPayload {
    /// Independent replicas; answers take the median across them.
    pub sketches: Vec<RandomSketch>,
    /// Arrival at which the item last took an entry.
    pub t_x: Timestamp,
    /// Arrivals since `t_x`, inclusive.
    pub i_x: u64,
}

impl SquadPayload {
    pub fn stored_count(&self) -> usize {
        self.sketches.iter().map(RandomSketch::stored_count).sum()
    }
}

/// Read-only view of a monitored item.
#[derive(Debug, Clone, Copy)]
pub struct SquadEntry<'a> {
    pub count: u64,
    pub payload: &'a SquadPayload,
}

#[derive(Debug, Clone)]
pub struct SquadEstimator {
    reservoir: Reservoir<TimedSample, StreamRng>,
    table: SpaceSaving<SquadPayload>,
    eps_rnd: f64,
    repetitions: usize,
    sketch_seeds: StreamRng,
    n: u64,
}

impl SquadEstimator {
    pub fn new(cfg: &ProblemConfig, sizing: &Sizing) -> Result<Self> {
        let z = squad_reservoir_capacity(cfg, sizing.c_z)?;
        let m = squad_entry_capacity(cfg)?;
        Self::with_capacities(z, m, cfg.epsilon / 2.0, sizing.repetitions, sizing.sampling, cfg.seed)
    }

    pub fn with_capacities(
        z: usize,
        m: usize,
        eps_rnd: f64,
        repetitions: usize,
        mode: SamplingMode,
        seed: u64,
    ) -> Result<Self> {
        if z == 0 || m == 0 || repetitions == 0 {
            return Err(Error::param("SQUAD capacities and repetitions must be positive"));
        }
        RandomSketch::new(eps_rnd, seeded(0, 0))?;
        Ok(SquadEstimator {
            reservoir: Reservoir::new(z, mode, seeded(seed, SALT_RESERVOIR)),
            table: SpaceSaving::new(m),
            eps_rnd,
            repetitions,
            sketch_seeds: seeded(seed, SALT_SKETCH),
            n: 0,
        })
    }

    pub fn reservoir(&self) -> &Reservoir<TimedSample, StreamRng> {
        &self.reservoir
    }

    pub fn table(&self) -> &SpaceSaving<SquadPayload> {
        &self.table
    }

    pub fn entry(&self, id: ItemId) -> Option<SquadEntry<'_>> {
        self.table.get(id).map(|e| SquadEntry { count: e.count(), payload: &e.payload })
    }

    /// Weight of one reservoir sample, `N / z`, floored at 1 while the
    /// reservoir still holds the whole stream.
    pub fn sample_weight(&self) -> f64 {
        let z = self.reservoir.capacity() as f64;
        (self.n as f64 / z).max(1.0)
    }
}

impl Estimator for SquadEstimator {
    fn name(&self) -> &'static str {
        "squad"
    }

    fn insert(&mut self, element: StreamElement) {
        self.n += 1;
        let ts = Timestamp(self.n);
        self.reservoir.offer(TimedSample { id: element.id, latency: element.latency, ts });

        let (eps, reps, seeds) = (self.eps_rnd, self.repetitions, &mut self.sketch_seeds);
        let (touch, entry) = self.table.touch(element.id, || SquadPayload {
            sketches: (0..reps)
                .map(|_| {
                    RandomSketch::new(eps, StreamRng::from_rng(&mut *seeds))
                        .expect("validated at construction")
                })
                .collect(),
            t_x: ts,
            i_x: 0,
        });
        let payload = &mut entry.payload;
        match touch {
            Touch::Existing => payload.i_x += 1,
            Touch::Fresh | Touch::Evicted { .. } => {
                payload.sketches.iter_mut().for_each(RandomSketch::reset);
                payload.i_x = 1;
                payload.t_x = ts;
            }
        }
        for s in &mut payload.sketches {
            s.insert(element.latency);
        }
    }

    fn query(&self, id: ItemId, q: f64) -> Result<QueryAnswer> {
        check_quantile(q)?;
        if self.n == 0 {
            return Err(Error::Empty);
        }
        let w = self.sample_weight();
        let Some(entry) = self.table.get(id) else {
            let (s_x, _) = self.reservoir.collect(id, Timestamp::END);
            return Ok(QueryAnswer::unmonitored(w * s_x as f64));
        };
        let p = &entry.payload;
        let (s_x, samples) = self.reservoir.collect(id, p.t_x);
        let freq = w * s_x as f64 + p.i_x as f64;
        let mut answers: Vec<Latency> = p
            .sketches
            .iter()
            .map(|s| s.merge_with_weighted_samples(&samples, w)?.quantile(q))
            .collect::<Result<_>>()?;
        answers.sort_unstable();
        Ok(QueryAnswer::monitored(freq, answers[(answers.len() - 1) / 2]))
    }

    fn footprint(&self) -> usize {
        self.reservoir.len() + self.table.len() + self.table.footprint(SquadPayload::stored_count)
    }

    fn footprint_bytes(&self) -> usize {
        let entry = std::mem::size_of::<ItemId>() + 3 * std::mem::size_of::<u64>();
        self.reservoir.len() * std::mem::size_of::<TimedSample>()
            + self.table.len() * entry
            + self.table.footprint(SquadPayload::stored_count) * std::mem::size_of::<Latency>()
    }

    fn elements_seen(&self) -> u64 {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(id: u64, v: f64) -> StreamElement {
        StreamElement::new(id, v).unwrap()
    }

    #[test]
    fn first_element() {
        let mut e = SquadEstimator::with_capacities(10, 4, 0.05, 1, SamplingMode::SkipL, 1).unwrap();
        assert_eq!(e.footprint(), 0);
        e.insert(el(7, 0.5));
        let entry = e.entry(ItemId(7)).unwrap();
        assert_eq!(entry.count, 1);
        assert_eq!(entry.payload.i_x, 1);
        assert_eq!(entry.payload.t_x, Timestamp(1));
        assert_eq!(entry.payload.sketches[0].quantile(0.5).unwrap().get(), 0.5);
        let s = e.reservoir().slots()[0];
        assert_eq!((s.id, s.latency.get(), s.ts), (ItemId(7), 0.5, Timestamp(1)));
        // sample + entry + one sketch value
        assert_eq!(e.footprint(), 3);
    }

    #[test]
    fn eviction_restarts_the_sketch() {
        let mut e = SquadEstimator::with_capacities(100, 1, 0.05, 1, SamplingMode::SkipL, 1).unwrap();
        e.insert(el(1, 1.0));
        e.insert(el(1, 2.0));
        e.insert(el(2, 9.0));
        let entry = e.entry(ItemId(2)).unwrap();
        assert_eq!(entry.count, 3);
        assert_eq!(entry.payload.i_x, 1);
        assert_eq!(entry.payload.t_x, Timestamp(3));
        assert_eq!(entry.payload.sketches[0].count(), 1);
        // Item 2 has no samples before t_x, and the reservoir still holds
        // everything, so the sample weight is 1.
        let a = e.query(ItemId(2), 0.5).unwrap();
        assert_eq!(a.freq_estimate, 1.0);
        // Item 1 lost its entry; its two samples answer for it.
        assert_eq!(e.query(ItemId(1), 0.5).unwrap(), QueryAnswer::unmonitored(2.0));
    }

    #[test]
    fn repetitions_build_independent_replicas() {
        let mut e = SquadEstimator::with_capacities(10, 4, 0.2, 3, SamplingMode::SkipL, 1).unwrap();
        for i in 0..500 {
            e.insert(el(1, i as f64));
        }
        let p = e.entry(ItemId(1)).unwrap().payload;
        assert_eq!(p.sketches.len(), 3);
        assert!(p.sketches.iter().all(|s| s.count() == 500));
        assert!(e.query(ItemId(1), 0.5).unwrap().monitored);
    }
}
