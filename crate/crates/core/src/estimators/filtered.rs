//! Pre-filter: forward each element with probability `p`.

use crate::error::{check_quantile, Error, Result};
use crate::rng::{geometric_skip, seeded, StreamRng, SALT_FILTER};
use crate::types::{ItemId, ProblemConfig, QueryAnswer, StreamElement};

use super::Estimator;

/// Stream length after which a filtered estimator's guarantees apply:
/// `ceil(ln(2 / ((1 - alpha) delta)) / (theta ((1 - alpha) eps)^2 p))`.
pub fn convergence_n(cfg: &ProblemConfig, p: f64, alpha: f64) -> f64 {
    let slack = 1.0 - alpha;
    ((2.0 / (slack * cfg.delta)).ln() / (cfg.theta * (slack * cfg.epsilon).powi(2) * p)).ceil()
}

#[derive(Debug, Clone)]
pub struct FilteredEstimator<E> {
    inner: E,
    p: f64,
    alpha: f64,
    rng: StreamRng,
    skip: u64,
    n: u64,
}

impl<E: Estimator> FilteredEstimator<E> {
    /// `inner` should already be sized by [`inner_config`](Self::inner_config).
    pub fn new(inner: E, p: f64, alpha: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param(format!("filter probability must lie in (0, 1], got {p}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let mut rng = seeded(seed, SALT_FILTER);
        let skip = geometric_skip(&mut rng, p);
        Ok(FilteredEstimator { inner, p, alpha, rng, skip, n: 0 })
    }

    /// `(theta, alpha eps, alpha delta)` for the wrapped estimator.
    pub fn inner_config(cfg: &ProblemConfig, alpha: f64) -> Result<ProblemConfig> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        ProblemConfig::new(cfg.theta, alpha * cfg.epsilon, alpha * cfg.delta, cfg.seed)
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl<E: Estimator> Estimator for FilteredEstimator<E> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn insert(&mut self, element: StreamElement) {
        self.n += 1;
        if self.skip == 0 {
            self.inner.insert(element);
            self.skip = geometric_skip(&mut self.rng, self.p);
        } else {
            self.skip -= 1;
        }
    }

    fn query(&self, id: ItemId, q: f64) -> Result<QueryAnswer> {
        check_quantile(q)?;
        if self.n == 0 {
            return Err(Error::Empty);
        }
        if self.inner.elements_seen() == 0 {
            return Ok(QueryAnswer::unmonitored(0.0));
        }
        let mut a = self.inner.query(id, q)?;
        a.freq_estimate /= self.p;
        Ok(a)
    }

    fn footprint(&self) -> usize {
        self.inner.footprint()
    }

    fn footprint_bytes(&self) -> usize {
        self.inner.footprint_bytes()
    }

    fn elements_seen(&self) -> u64 {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{QuasiEstimator, SquareEstimator};
    use crate::sampling::SamplingMode;

    fn el(id: u64, v: f64) -> StreamElement {
        StreamElement::new(id, v).unwrap()
    }

    #[test]
    fn advisory_threshold() {
        let cfg = ProblemConfig::new(0.01, 0.05, 0.05, 0).unwrap();
        let n = convergence_n(&cfg, 0.1, 0.9);
        // ln(400) / (0.01 * 0.005^2 * 0.1) = 2.3965e8
        assert!((n - 2.3965e8).abs() < 1e5, "{n}");
    }

    #[test]
    fn p_one_is_identity() {
        let mut bare = SquareEstimator::with_capacity(50, SamplingMode::SkipL, 4);
        let mut wrapped =
            FilteredEstimator::new(SquareEstimator::with_capacity(50, SamplingMode::SkipL, 4), 1.0, 0.5, 4)
                .unwrap();
        for i in 0..2000u64 {
            let e = el(i % 7, (i * 13 % 101) as f64);
            bare.insert(e);
            wrapped.insert(e);
        }
        for id in 0..8 {
            for q in [0.0, 0.5, 0.99] {
                assert_eq!(bare.query(ItemId(id), q).unwrap(), wrapped.query(ItemId(id), q).unwrap());
            }
        }
    }

    #[test]
    fn counts_raw_stream_and_scales_frequency() {
        let inner = QuasiEstimator::with_capacity(10, 0.01).unwrap();
        let mut f = FilteredEstimator::new(inner, 0.25, 0.9, 11).unwrap();
        assert!(matches!(f.query(ItemId(1), 0.5), Err(Error::Empty)));
        for _ in 0..40_000 {
            f.insert(el(1, 1.0));
        }
        assert_eq!(f.elements_seen(), 40_000);
        let inner_n = f.inner().elements_seen();
        assert!((9_000..11_000).contains(&inner_n), "{inner_n}");
        let a = f.query(ItemId(1), 0.5).unwrap();
        assert_eq!(a.freq_estimate, inner_n as f64 * 4.0);
    }
}
