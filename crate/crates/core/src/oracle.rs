//! Exact quantile/rank conventions and the brute-force ground truth.
//!
//! Conventions used throughout the crate:
//!
//! * the `q`-quantile of `n` values is the `k`-th smallest, where `k` is the
//!   smallest integer in `1..=n` with `k / n >= q` (so `q = 0` gives the
//!   minimum);
//! * the rank of `v` is the fraction of values `<= v`.
//!
//! Both are evaluated with the same floating-point expression `k as f64 / n
//! as f64`, so `exact_rank(L, exact_quantile(L, q)) >= q` always holds.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use crate::error::{check_quantile, Error, Result};
use crate::types::{ItemId, Latency, StreamElement};

/// Smallest `k` in `1..=n` with `k / n >= q`.
pub(crate) fn quantile_index(n: usize, q: f64) -> usize {
    debug_assert!(n > 0);
    let nf = n as f64;
    let mut k = ((q * nf).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= q {
        k -= 1;
    }
    while k < n && (k as f64 / nf) < q {
        k += 1;
    }
    k
}

/// The `q`-quantile of an unsorted multiset.
pub fn exact_quantile(latencies: &[Latency], q: f64) -> Result<Latency> {
    check_quantile(q)?;
    if latencies.is_empty() {
        return Err(Error::Empty);
    }
    let k = quantile_index(latencies.len(), q);
    let mut scratch = latencies.to_vec();
    let (_, kth, _) = scratch.select_nth_unstable(k - 1);
    Ok(*kth)
}

/// Fraction of `latencies` that are `<= v`.
pub fn exact_rank(latencies: &[Latency], v: Latency) -> Result<f64> {
    if latencies.is_empty() {
        return Err(Error::Empty);
    }
    let below = latencies.iter().filter(|&&l| l <= v).count();
    Ok(below as f64 / latencies.len() as f64)
}

/// `|rank(answer) - q|` against the true multiset.
pub fn percentage_error(answer: Latency, q: f64, truth: &[Latency]) -> Result<f64> {
    Ok((exact_rank(truth, answer)? - q).abs())
}

/// A sorted copy of a multiset, for answering many rank/quantile queries.
#[derive(Debug, Clone)]
pub struct SortedLatencies {
    values: Vec<Latency>,
}

impl SortedLatencies {
    pub fn new(mut values: Vec<Latency>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        values.sort_unstable();
        Ok(SortedLatencies { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[Latency] {
        &self.values
    }

    pub fn quantile(&self, q: f64) -> Result<Latency> {
        check_quantile(q)?;
        Ok(self.values[quantile_index(self.values.len(), q) - 1])
    }

    pub fn rank(&self, v: Latency) -> f64 {
        self.values.partition_point(|&l| l <= v) as f64 / self.values.len() as f64
    }

    pub fn percentage_error(&self, answer: Latency, q: f64) -> f64 {
        (self.rank(answer) - q).abs()
    }

    /// Smallest `|rank(v) - q|` achievable by any value of the multiset.
    ///
    /// This is the discretization floor: no answer drawn from the data can
    /// do better, e.g. a single observation always has rank 1.
    pub fn best_achievable_error(&self, q: f64) -> f64 {
        let n = self.values.len() as f64;
        // Only ranks at the end of a run of equal values are attainable.
        let mut best = f64::INFINITY;
        let mut i = 0;
        while i < self.values.len() {
            let mut j = i + 1;
            while j < self.values.len() && self.values[j] == self.values[i] {
                j += 1;
            }
            best = best.min((j as f64 / n - q).abs());
            i = j;
        }
        best
    }
}

/// Keeps every latency of every id. Ground truth for frequencies,
/// quantiles and the heavy-hitter set.
#[derive(Debug, Default, Clone)]
pub struct ExactOracle {
    per_id: FxHashMap<ItemId, Vec<Latency>>,
    total: u64,
}

impl ExactOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, element: StreamElement) {
        self.per_id.entry(element.id).or_default().push(element.latency);
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn freq(&self, id: ItemId) -> u64 {
        self.per_id.get(&id).map_or(0, |v| v.len() as u64)
    }

    pub fn latencies(&self, id: ItemId) -> Option<&[Latency]> {
        self.per_id.get(&id).map(Vec::as_slice)
    }

    pub fn sorted(&self, id: ItemId) -> Option<SortedLatencies> {
        self.per_id
            .get(&id)
            .and_then(|v| SortedLatencies::new(v.clone()).ok())
    }

    pub fn distinct(&self) -> usize {
        self.per_id.len()
    }

    /// Every id with `f_x >= theta * N`.
    pub fn heavy_hitters(&self, theta: f64) -> BTreeSet<ItemId> {
        let n = self.total as f64;
        self.per_id
            .iter()
            .filter(|(_, v)| is_heavy(v.len() as u64, n, theta))
            .map(|(&id, _)| id)
            .collect()
    }
}

impl Extend<StreamElement> for ExactOracle {
    fn extend<I: IntoIterator<Item = StreamElement>>(&mut self, iter: I) {
        for e in iter {
            self.insert(e);
        }
    }
}

impl FromIterator<StreamElement> for ExactOracle {
    fn from_iter<I: IntoIterator<Item = StreamElement>>(iter: I) -> Self {
        let mut oracle = ExactOracle::new();
        oracle.extend(iter);
        oracle
    }
}

/// `f >= theta * n`, evaluated as `f / n >= theta` so that decimal
/// boundaries such as 5 / 100 against 0.05 compare equal.
pub fn is_heavy(freq: u64, n: f64, theta: f64) -> bool {
    n > 0.0 && freq as f64 / n >= theta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(v: &[f64]) -> Vec<Latency> {
        v.iter().map(|&x| Latency::new(x).unwrap()).collect()
    }

    #[test]
    fn odd_median() {
        let l = lat(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(exact_quantile(&l, 0.5).unwrap().get(), 3.0);
    }

    #[test]
    fn singleton_quantile() {
        assert_eq!(exact_quantile(&lat(&[7.0]), 0.99).unwrap().get(), 7.0);
    }

    #[test]
    fn zero_quantile_is_minimum() {
        let l = lat(&[4.0, 2.0, 9.0]);
        assert_eq!(exact_quantile(&l, 0.0).unwrap().get(), 2.0);
    }

    #[test]
    fn empty_errors() {
        assert!(matches!(exact_quantile(&[], 0.5), Err(Error::Empty)));
        assert!(matches!(exact_rank(&[], Latency::default()), Err(Error::Empty)));
        assert!(matches!(
            percentage_error(Latency::default(), 0.5, &[]),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn out_of_range_q() {
        assert!(matches!(
            exact_quantile(&lat(&[1.0]), 1.5),
            Err(Error::InvalidQuantile(_))
        ));
    }

    #[test]
    fn rank_direct_count() {
        let l = lat(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(exact_rank(&l, Latency::new(2.0).unwrap()).unwrap(), 0.5);
        assert_eq!(exact_rank(&l, Latency::new(4.0).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn rank_of_min_at_q_one() {
        let l: Vec<Latency> = lat(&(1..=10).map(f64::from).collect::<Vec<_>>());
        let err = percentage_error(Latency::new(1.0).unwrap(), 1.0, &l).unwrap();
        assert!((err - 0.9).abs() < 1e-12);
    }

    #[test]
    fn index_agrees_with_division() {
        // 0.07 * 100 rounds above 7 in floating point; the index must still be 7.
        assert_eq!(quantile_index(100, 0.07), 7);
        assert_eq!(quantile_index(10, 0.9), 9);
        assert_eq!(quantile_index(10, 0.0), 1);
        assert_eq!(quantile_index(10, 1.0), 10);
    }

    #[test]
    fn heavy_hitter_boundary_is_inclusive() {
        let mut o = ExactOracle::new();
        for _ in 0..5 {
            o.insert(StreamElement::new(1, 1.0).unwrap());
        }
        for i in 0..95 {
            o.insert(StreamElement::new(100 + i, 1.0).unwrap());
        }
        assert!(o.heavy_hitters(0.05).contains(&ItemId(1)));
        assert!(!o.heavy_hitters(0.051).contains(&ItemId(1)));
    }

    #[test]
    fn oracle_counts() {
        let mut o = ExactOracle::new();
        for _ in 0..5 {
            o.insert(StreamElement::new(1, 1.0).unwrap());
        }
        for _ in 0..3 {
            o.insert(StreamElement::new(2, 1.0).unwrap());
        }
        assert_eq!(o.freq(ItemId(1)), 5);
        assert_eq!(o.freq(ItemId(2)), 3);
        assert_eq!(o.freq(ItemId(3)), 0);
        assert_eq!(o.total(), 8);
    }

    #[test]
    fn best_achievable_error_on_singleton() {
        let s = SortedLatencies::new(lat(&[3.0])).unwrap();
        assert_eq!(s.best_achievable_error(0.5), 0.5);
        assert_eq!(s.best_achievable_error(1.0), 0.0);
    }
}
