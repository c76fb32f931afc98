//! Randomized buffer-compactor quantile sketch.
//!
//! Raw values land in an open level-0 buffer of capacity `s`. A full buffer
//! is sealed and carried upward like a binary counter: while a sealed buffer
//! already sits at the carry's level, the two are merged, sorted, and every
//! second element is kept starting at a random offset in `{0, 1}`; the
//! survivors move one level up with doubled weight. At rest there is at
//! most one sealed buffer per level, and a level-`h` value stands for
//! `2^h` inserts.

use rand::Rng;

use crate::error::{check_quantile, Error, Result};
use crate::rng::StreamRng;
use crate::types::Latency;

/// Buffer capacity for rank error `eps`:
/// `max(2, ceil(sqrt(1 + log2(1/eps)) / eps))`, rounded up to even.
pub fn buffer_capacity(eps: f64) -> usize {
    let inv = 1.0 / eps;
    let s = ((1.0 + inv.log2()).sqrt() * inv).ceil().max(2.0) as usize;
    s + (s & 1)
}

#[derive(Debug, Clone)]
pub struct RandomSketch {
    capacity: usize,
    open: Vec<Latency>,
    /// `sealed[h]` is empty or holds exactly `capacity` sorted values of
    /// weight `2^h`.
    sealed: Vec<Vec<Latency>>,
    n: u64,
    rng: StreamRng,
}

impl RandomSketch {
    pub fn new(eps: f64, rng: StreamRng) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(format!("Random epsilon must lie in (0, 1), got {eps}")));
        }
        Ok(Self::with_capacity(buffer_capacity(eps), rng))
    }

    /// A sketch with an explicit (even, >= 2) buffer capacity.
    pub fn with_capacity(capacity: usize, rng: StreamRng) -> Self {
        assert!(capacity >= 2 && capacity.is_multiple_of(2), "capacity must be even and >= 2");
        RandomSketch {
            capacity,
            open: Vec::with_capacity(capacity),
            sealed: Vec::new(),
            n: 0,
            rng,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn stored_count(&self) -> usize {
        self.open.len() + self.sealed.iter().map(Vec::len).sum::<usize>()
    }

    /// `(level, values)` for every non-empty buffer; the open buffer is
    /// reported at level 0 after any sealed level-0 buffer.
    pub fn buffers(&self) -> impl Iterator<Item = (u32, &[Latency])> {
        self.sealed
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_empty())
            .map(|(h, b)| (h as u32, b.as_slice()))
            .chain(std::iter::once((0, self.open.as_slice())).filter(|(_, b)| !b.is_empty()))
    }

    /// Σ |buffer| · 2^level. Always equals [`count`](Self::count).
    pub fn weighted_count(&self) -> u64 {
        self.buffers().map(|(h, b)| (b.len() as u64) << h).sum()
    }

    pub fn insert(&mut self, value: Latency) {
        self.n += 1;
        self.open.push(value);
        if self.open.len() == self.capacity {
            self.seal();
        }
    }

    fn seal(&mut self) {
        let mut carry = std::mem::replace(&mut self.open, Vec::with_capacity(self.capacity));
        carry.sort_unstable();
        let mut level = 0;
        loop {
            if level == self.sealed.len() {
                self.sealed.push(Vec::new());
            }
            if self.sealed[level].is_empty() {
                self.sealed[level] = carry;
                return;
            }
            let resident = std::mem::take(&mut self.sealed[level]);
            carry = self.compact(&resident, &carry);
            level += 1;
        }
    }

    /// Merges two sorted buffers and keeps every second element.
    fn compact(&mut self, a: &[Latency], b: &[Latency]) -> Vec<Latency> {
        let offset = usize::from(self.rng.random::<bool>());
        let mut out = Vec::with_capacity(self.capacity);
        let (mut i, mut j, mut pos) = (0, 0, 0usize);
        while i < a.len() || j < b.len() {
            let take_a = j == b.len() || (i < a.len() && a[i] <= b[j]);
            let v = if take_a {
                i += 1;
                a[i - 1]
            } else {
                j += 1;
                b[j - 1]
            };
            if pos % 2 == offset {
                out.push(v);
            }
            pos += 1;
        }
        out
    }

    /// Stored `(value, weight)` pairs sorted by value.
    fn weighted_values(&self) -> Vec<(Latency, f64)> {
        let mut all: Vec<(Latency, f64)> = Vec::with_capacity(self.stored_count());
        for (h, buf) in self.buffers() {
            let w = (1u64 << h) as f64;
            all.extend(buf.iter().map(|&v| (v, w)));
        }
        all.sort_unstable_by_key(|a| a.0);
        all
    }

    /// The stored value whose estimated (weighted) rank is closest to `q * n`.
    pub fn quantile(&self, q: f64) -> Result<Latency> {
        check_quantile(q)?;
        if self.n == 0 {
            return Err(Error::Empty);
        }
        let values = self.weighted_values();
        let target = q * self.n as f64;
        let mut cum = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for &(_, w) in &values {
            acc += w;
            cum.push(acc);
        }
        let i = cum.partition_point(|&c| c < target).min(values.len() - 1);
        let pick = if i > 0 && (target - cum[i - 1]) <= (cum[i] - target) {
            i - 1
        } else {
            i
        };
        Ok(values[pick].0)
    }

    /// Weighted multiset over the stored values plus `samples`, each sample
    /// carrying `sample_weight`. The sketch itself is left untouched.
    pub fn merge_with_weighted_samples(
        &self,
        samples: &[Latency],
        sample_weight: f64,
    ) -> Result<WeightedQuantiles> {
        if !(sample_weight > 0.0 && sample_weight.is_finite()) {
            return Err(Error::param(format!("sample weight must be positive, got {sample_weight}")));
        }
        let mut values = self.weighted_values();
        values.extend(samples.iter().map(|&v| (v, sample_weight)));
        WeightedQuantiles::new(values)
    }

    pub fn reset(&mut self) {
        self.open.clear();
        self.sealed.clear();
        self.n = 0;
    }
}

/// A finite weighted multiset of latencies with cumulative weights.
#[derive(Debug, Clone)]
pub struct WeightedQuantiles {
    values: Vec<Latency>,
    cumulative: Vec<f64>,
}

impl WeightedQuantiles {
    pub fn new(mut pairs: Vec<(Latency, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty);
        }
        pairs.sort_by_key(|a| a.0);
        let mut acc = 0.0;
        let mut values = Vec::with_capacity(pairs.len());
        let mut cumulative = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            acc += w;
            values.push(v);
            cumulative.push(acc);
        }
        Ok(WeightedQuantiles { values, cumulative })
    }

    pub fn total_weight(&self) -> f64 {
        *self.cumulative.last().expect("non-empty by construction")
    }

    /// Smallest value whose cumulative weight fraction reaches `q`.
    pub fn quantile(&self, q: f64) -> Result<Latency> {
        check_quantile(q)?;
        let total = self.total_weight();
        let i = self.cumulative.partition_point(|&c| c / total < q);
        Ok(self.values[i.min(self.values.len() - 1)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn l(v: f64) -> Latency {
        Latency::new(v).unwrap()
    }

    #[test]
    fn capacity_formula() {
        // eps = 0.025: 40 * sqrt(1 + 5.32) = 100.6 -> 101 -> 102
        assert_eq!(buffer_capacity(0.025), 102);
        // eps = 0.5: 2 * sqrt(2) = 2.83 -> 3 -> 4
        assert_eq!(buffer_capacity(0.5), 4);
        assert!(buffer_capacity(0.9) >= 2);
        assert_eq!(buffer_capacity(0.9) % 2, 0);
    }

    #[test]
    fn single_value() {
        let mut s = RandomSketch::new(0.05, seeded(1, 1)).unwrap();
        s.insert(l(42.0));
        for q in [0.0, 0.5, 1.0] {
            assert_eq!(s.quantile(q).unwrap().get(), 42.0);
        }
    }

    #[test]
    fn eight_values_capacity_four() {
        let mut s = RandomSketch::with_capacity(4, seeded(3, 9));
        for v in 1..=8 {
            s.insert(l(v as f64));
        }
        // Two sealed level-0 buffers [1..4] and [5..8] collide and compact
        // into one level-1 buffer of four values.
        let bufs: Vec<(u32, Vec<f64>)> =
            s.buffers().map(|(h, b)| (h, b.iter().map(|v| v.get()).collect())).collect();
        assert_eq!(bufs.len(), 1);
        assert_eq!(bufs[0].0, 1);
        let kept = &bufs[0].1;
        assert!(kept == &[1.0, 3.0, 5.0, 7.0] || kept == &[2.0, 4.0, 6.0, 8.0], "{kept:?}");
        assert_eq!(s.weighted_count(), 8);
        assert_eq!(s.stored_count(), 4);
    }

    #[test]
    fn conservation_and_one_buffer_per_level() {
        let mut s = RandomSketch::with_capacity(6, seeded(5, 5));
        for i in 0..10_000u64 {
            s.insert(l((i * 37 % 1001) as f64));
            assert_eq!(s.weighted_count(), s.count());
            assert!(s.sealed.iter().all(|b| b.is_empty() || b.len() == 6));
            assert!(s.open.len() < 6);
        }
    }

    #[test]
    fn stored_count_is_binary_counter() {
        let s_cap = 8usize;
        let mut s = RandomSketch::with_capacity(s_cap, seeded(2, 2));
        for n in 1..=5000u64 {
            s.insert(l(n as f64));
            let full = n / s_cap as u64;
            let expected = s_cap as u64 * full.count_ones() as u64 + n % s_cap as u64;
            assert_eq!(s.stored_count() as u64, expected);
        }
    }

    #[test]
    fn reset_keeps_parameters() {
        let mut s = RandomSketch::new(0.05, seeded(1, 1)).unwrap();
        for v in 0..1000 {
            s.insert(l(v as f64));
        }
        let cap = s.capacity();
        s.reset();
        assert!(matches!(s.quantile(0.5), Err(Error::Empty)));
        assert_eq!(s.capacity(), cap);
        s.insert(l(5.0));
        assert_eq!(s.quantile(0.5).unwrap().get(), 5.0);
    }

    #[test]
    fn merge_examples() {
        let s = RandomSketch::with_capacity(4, seeded(1, 1));
        let w = s
            .merge_with_weighted_samples(&[l(1.0), l(2.0), l(3.0)], 1.0)
            .unwrap();
        assert_eq!(w.quantile(0.5).unwrap().get(), 2.0);

        let mut s = RandomSketch::with_capacity(4, seeded(1, 1));
        s.insert(l(10.0));
        s.insert(l(20.0));
        let w = s.merge_with_weighted_samples(&[l(30.0)], 2.0).unwrap();
        assert_eq!(w.total_weight(), 4.0);
        assert_eq!(w.quantile(0.75).unwrap().get(), 30.0);
    }

    #[test]
    fn merge_of_nothing_errors() {
        let s = RandomSketch::with_capacity(4, seeded(1, 1));
        assert!(matches!(s.merge_with_weighted_samples(&[], 1.0), Err(Error::Empty)));
    }

    #[test]
    fn merge_leaves_sketch_untouched() {
        let mut s = RandomSketch::with_capacity(4, seeded(1, 1));
        for v in 0..50 {
            s.insert(l(v as f64));
        }
        let before = s.clone();
        let _ = s.merge_with_weighted_samples(&[l(1.0)], 3.5).unwrap();
        assert_eq!(before.stored_count(), s.stored_count());
        assert_eq!(before.quantile(0.3).unwrap(), s.quantile(0.3).unwrap());
    }
}
