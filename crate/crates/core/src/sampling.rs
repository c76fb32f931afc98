//! Fixed-capacity uniform reservoir sampling.
//!
//! `Naive` draws one integer per arrival once the reservoir is full.
//! `SkipL` draws the gap to the next admission geometrically, so the number
//! of draws grows with the number of admissions, `O(z (1 + ln(n / z)))`.

use rand::{Rng, RngCore};

use crate::rng::{open_unit, StreamRng};
use crate::types::{ItemId, Latency, StreamElement, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    Naive,
    #[default]
    SkipL,
}

/// A sampled arrival tagged with its 1-based stream position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedSample {
    pub id: ItemId,
    pub latency: Latency,
    pub ts: Timestamp,
}

#[derive(Debug, Clone)]
pub struct Reservoir<T, R = StreamRng> {
    capacity: usize,
    slots: Vec<T>,
    seen: u64,
    mode: SamplingMode,
    rng: R,
    /// SkipL: position of the next admitted arrival.
    next_admit: u64,
    /// SkipL: running weight `W`.
    w: f64,
}

impl<T, R: RngCore> Reservoir<T, R> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize, mode: SamplingMode, rng: R) -> Self {
        assert!(capacity > 0, "reservoir capacity must be positive");
        Reservoir {
            capacity,
            slots: Vec::with_capacity(capacity.min(1 << 20)),
            seen: 0,
            mode,
            rng,
            next_admit: 0,
            w: 0.0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    /// Arrivals offered so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[T] {
        &self.slots
    }

    pub fn rng(&self) -> &R {
        &self.rng
    }

    /// Offers the next arrival; returns whether it was stored.
    pub fn offer(&mut self, item: T) -> bool {
        self.offer_with(|| item)
    }

    /// Like [`offer`](Self::offer) but only builds the item when it is
    /// admitted.
    pub fn offer_with(&mut self, make: impl FnOnce() -> T) -> bool {
        self.seen += 1;
        let n = self.seen;
        if self.slots.len() < self.capacity {
            self.slots.push(make());
            if self.slots.len() == self.capacity && self.mode == SamplingMode::SkipL {
                self.w = self.next_weight(1.0);
                self.schedule_next();
            }
            return true;
        }
        match self.mode {
            SamplingMode::Naive => {
                let j = self.rng.random_range(0..n);
                if j < self.capacity as u64 {
                    self.slots[j as usize] = make();
                    true
                } else {
                    false
                }
            }
            SamplingMode::SkipL => {
                if n < self.next_admit {
                    return false;
                }
                let j = self.rng.random_range(0..self.capacity);
                self.slots[j] = make();
                self.w = self.next_weight(self.w);
                self.schedule_next();
                true
            }
        }
    }

    fn next_weight(&mut self, w: f64) -> f64 {
        w * (open_unit(&mut self.rng).ln() / self.capacity as f64).exp()
    }

    fn schedule_next(&mut self) {
        let denom = (-self.w).ln_1p();
        let skip = if denom < 0.0 {
            (open_unit(&mut self.rng).ln() / denom).floor()
        } else {
            f64::INFINITY
        };
        self.next_admit = if skip >= (u64::MAX - self.seen - 1) as f64 {
            u64::MAX
        } else {
            self.seen + skip as u64 + 1
        };
    }
}

impl<R: RngCore> Reservoir<TimedSample, R> {
    /// Count and latencies of stored samples of `id` with `ts < before`.
    /// [`Timestamp::END`] collects every sample of `id`.
    pub fn collect(&self, id: ItemId, before: Timestamp) -> (u64, Vec<Latency>) {
        let latencies: Vec<Latency> = self
            .slots
            .iter()
            .filter(|s| s.id == id && s.ts < before)
            .map(|s| s.latency)
            .collect();
        (latencies.len() as u64, latencies)
    }
}

impl<R: RngCore> Reservoir<StreamElement, R> {
    /// Latencies of every stored sample of `id`.
    pub fn collect_all(&self, id: ItemId) -> Vec<Latency> {
        self.slots.iter().filter(|s| s.id == id).map(|s| s.latency).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, CountingRng};

    fn sample(id: u64, v: f64, ts: u64) -> TimedSample {
        TimedSample { id: ItemId(id), latency: Latency::new(v).unwrap(), ts: Timestamp(ts) }
    }

    #[test]
    fn fill_phase_keeps_everything_in_order() {
        for mode in [SamplingMode::Naive, SamplingMode::SkipL] {
            let mut r = Reservoir::new(10, mode, CountingRng::new(seeded(1, 2)));
            for i in 0..10 {
                assert!(r.offer(i));
            }
            assert_eq!(r.slots(), &(0..10).collect::<Vec<_>>()[..]);
            if mode == SamplingMode::Naive {
                assert_eq!(r.rng().draws(), 0);
            }
        }
    }

    #[test]
    fn capacity_one_second_arrival_is_a_coin() {
        let mut admitted = 0;
        for seed in 0..2000 {
            let mut r = Reservoir::new(1, SamplingMode::Naive, seeded(seed, 3));
            r.offer(0);
            if r.offer(1) {
                admitted += 1;
                assert_eq!(r.slots(), &[1]);
            }
        }
        assert!((900..1100).contains(&admitted), "{admitted}");
    }

    #[test]
    fn size_law() {
        for mode in [SamplingMode::Naive, SamplingMode::SkipL] {
            let mut r = Reservoir::new(7, mode, seeded(9, 9));
            for i in 1..=1000u64 {
                r.offer(i);
                assert_eq!(r.len() as u64, i.min(7));
                assert_eq!(r.seen(), i);
            }
        }
    }

    #[test]
    fn collect_is_strict_on_timestamp() {
        let mut r: Reservoir<TimedSample> = Reservoir::new(3, SamplingMode::Naive, seeded(0, 0));
        assert_eq!(r.collect(ItemId(1), Timestamp::END), (0, vec![]));
        r.offer(sample(1, 1.0, 3));
        r.offer(sample(2, 2.0, 5));
        r.offer(sample(1, 3.0, 7));
        let (count, lat) = r.collect(ItemId(1), Timestamp(7));
        assert_eq!(count, 1);
        assert_eq!(lat[0].get(), 1.0);
        assert_eq!(r.collect(ItemId(1), Timestamp::END).0, 2);
    }
}
