//! Greenwald-Khanna quantile summary.
//!
//! Keeps a sorted list of tuples `(v, g, delta)` where `g` is the rank gap to
//! the previous tuple and `delta` bounds the rank uncertainty of `v`. With
//! `g + delta <= max(1, floor(2 * eps * n))` for every tuple, any rank `r`
//! has a tuple whose rank interval lies within `eps * n` of `r`.

use crate::error::{check_quantile, Error, Result};
use crate::types::Latency;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkTuple {
    pub value: Latency,
    pub g: u64,
    pub delta: u64,
}

#[derive(Debug, Clone)]
pub struct GkSketch {
    tuples: Vec<GkTuple>,
    n: u64,
    eps: f64,
    compress_every: u64,
    since_compress: u64,
}

impl GkSketch {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(format!("GK epsilon must lie in (0, 1), got {eps}")));
        }
        Ok(GkSketch {
            tuples: Vec::new(),
            n: 0,
            eps,
            compress_every: (1.0 / (2.0 * eps)).ceil().max(1.0) as u64,
            since_compress: 0,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Number of values inserted since creation or the last reset.
    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Stored tuples.
    pub fn stored_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuples(&self) -> &[GkTuple] {
        &self.tuples
    }

    /// The per-tuple capacity `max(1, floor(2 * eps * n))`.
    pub fn band(&self) -> u64 {
        self.raw_band().max(1)
    }

    fn raw_band(&self) -> u64 {
        (2.0 * self.eps * self.n as f64).floor() as u64
    }

    pub fn insert(&mut self, value: Latency) {
        self.n += 1;
        let pos = self.tuples.partition_point(|t| t.value <= value);
        let delta = if pos == 0 || pos == self.tuples.len() {
            0
        } else {
            self.raw_band().saturating_sub(1)
        };
        self.tuples.insert(pos, GkTuple { value, g: 1, delta });

        self.since_compress += 1;
        if self.since_compress >= self.compress_every {
            self.since_compress = 0;
            self.compress();
        }
    }

    /// Merges each tuple into its right neighbour whenever the merged tuple
    /// still satisfies the band. The first tuple (the minimum) is kept.
    fn compress(&mut self) {
        let len = self.tuples.len();
        if len < 3 {
            return;
        }
        let band = self.raw_band();
        let mut write = len - 1;
        // Walk right to left, accumulating into tuples[write].
        for read in (1..len - 1).rev() {
            let t = self.tuples[read];
            let acc = self.tuples[write];
            if t.g + acc.g + acc.delta <= band {
                self.tuples[write].g += t.g;
            } else {
                write -= 1;
                self.tuples[write] = t;
            }
        }
        write -= 1;
        self.tuples[write] = self.tuples[0];
        self.tuples.drain(..write);
    }

    /// A stored value whose rank interval is closest to `q * n`.
    pub fn quantile(&self, q: f64) -> Result<Latency> {
        check_quantile(q)?;
        if self.tuples.is_empty() {
            return Err(Error::Empty);
        }
        let target = q * self.n as f64;
        let mut rmin = 0u64;
        let mut best = (f64::INFINITY, self.tuples[0].value);
        for t in &self.tuples {
            rmin += t.g;
            let rmax = rmin + t.delta;
            let dist = (target - rmin as f64).max(rmax as f64 - target);
            if dist < best.0 {
                best = (dist, t.value);
            }
        }
        Ok(best.1)
    }

    pub fn reset(&mut self) {
        self.tuples.clear();
        self.n = 0;
        self.since_compress = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SortedLatencies;

    fn l(v: f64) -> Latency {
        Latency::new(v).unwrap()
    }

    fn check_invariants(s: &GkSketch) {
        let t = s.tuples();
        assert_eq!(t.iter().map(|t| t.g).sum::<u64>(), s.count());
        assert!(t.windows(2).all(|w| w[0].value <= w[1].value));
        for x in t {
            assert!(x.g >= 1);
            assert!(x.g + x.delta <= s.band(), "{x:?} band {}", s.band());
        }
        if let (Some(first), Some(last)) = (t.first(), t.last()) {
            assert_eq!(first.delta, 0);
            assert_eq!(last.delta, 0);
        }
    }

    #[test]
    fn one_to_ten() {
        let mut s = GkSketch::new(0.1).unwrap();
        let truth: Vec<Latency> = (1..=10).map(|v| l(v as f64)).collect();
        for &v in &truth {
            s.insert(v);
        }
        let sorted = SortedLatencies::new(truth).unwrap();
        for i in 0..=100 {
            let q = i as f64 / 100.0;
            let err = sorted.percentage_error(s.quantile(q).unwrap(), q);
            assert!(err <= 0.1 + 1e-12 || err <= sorted.best_achievable_error(q) + 1e-12);
        }
    }

    #[test]
    fn one_to_thousand_p90() {
        let mut s = GkSketch::new(0.05).unwrap();
        for v in 1..=1000 {
            s.insert(l(v as f64));
        }
        let ans = s.quantile(0.9).unwrap().get();
        assert!((850.0..=950.0).contains(&ans), "{ans}");
    }

    #[test]
    fn singleton() {
        let mut s = GkSketch::new(0.05).unwrap();
        s.insert(l(42.0));
        for q in [0.0, 0.3, 1.0] {
            assert_eq!(s.quantile(q).unwrap().get(), 42.0);
        }
    }

    #[test]
    fn reset_then_query_errors() {
        let mut s = GkSketch::new(0.05).unwrap();
        s.insert(l(1.0));
        s.reset();
        assert!(matches!(s.quantile(0.5), Err(Error::Empty)));
        assert_eq!(s.stored_count(), 0);
        s.insert(l(5.0));
        assert_eq!(s.quantile(0.5).unwrap().get(), 5.0);
    }

    #[test]
    fn invariants_hold_after_every_insert() {
        let mut s = GkSketch::new(0.05).unwrap();
        let mut x = 12345u64;
        for _ in 0..5000 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            s.insert(l((x >> 11) as f64));
            check_invariants(&s);
        }
    }

    #[test]
    fn compression_bounds_space() {
        let mut s = GkSketch::new(0.1).unwrap();
        for v in 0..100_000u64 {
            s.insert(l(((v * 7919) % 100_003) as f64));
        }
        // 1/eps * log2(eps * n) is about 100 here.
        assert!(s.stored_count() < 400, "{}", s.stored_count());
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(GkSketch::new(0.0).is_err());
        assert!(GkSketch::new(1.0).is_err());
    }
}
