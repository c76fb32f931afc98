//! One estimator over one trace, scored against the exact oracle.

use std::time::Instant;

use anyhow::Result;
use hhq_core::estimators::{build, build_filtered, convergence_n, BoxedEstimator, Estimator};
use hhq_core::{EstimatorKind, ExactOracle, ProblemConfig, Sizing, StreamElement};

use crate::report::{Row, RunReport};

/// Runs shorter than this get one untimed warm-up pass.
pub const WARMUP_BELOW: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filter {
    pub p: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: EstimatorKind,
    pub problem: ProblemConfig,
    pub sizing: Sizing,
    pub filter: Option<Filter>,
    pub qs: Vec<f64>,
    pub bytes: bool,
    pub time_queries: bool,
}

impl RunConfig {
    pub fn new(kind: EstimatorKind, problem: ProblemConfig) -> Self {
        RunConfig {
            kind,
            problem,
            sizing: Sizing::default(),
            filter: None,
            qs: vec![0.5, 0.9, 0.99],
            bytes: false,
            time_queries: false,
        }
    }

    pub fn build(&self) -> Result<BoxedEstimator> {
        Ok(match self.filter {
            None => build(self.kind, &self.problem, &self.sizing)?,
            Some(f) => Box::new(build_filtered(self.kind, &self.problem, &self.sizing, f.p, f.alpha)?),
        })
    }
}

/// Feeds `trace` into `estimator` and returns the elapsed wall time in ns.
pub fn timed_inserts(estimator: &mut dyn Estimator, trace: &[StreamElement]) -> f64 {
    let start = Instant::now();
    for &e in trace {
        estimator.insert(e);
    }
    start.elapsed().as_nanos() as f64
}

pub fn run(trace: &[StreamElement], cfg: &RunConfig) -> Result<RunReport> {
    let oracle: ExactOracle = trace.iter().copied().collect();
    run_with_oracle(trace, &oracle, cfg)
}

/// Like [`run`], reusing an oracle already built over `trace`.
pub fn run_with_oracle(trace: &[StreamElement], oracle: &ExactOracle, cfg: &RunConfig) -> Result<RunReport> {
    for &q in &cfg.qs {
        anyhow::ensure!((0.0..=1.0).contains(&q), "quantile {q} outside [0, 1]");
    }
    anyhow::ensure!(!trace.is_empty(), "trace is empty");

    if trace.len() < WARMUP_BELOW {
        let mut warm = cfg.build()?;
        timed_inserts(&mut *warm, trace);
    }
    let mut est = cfg.build()?;
    let insert_ns = timed_inserts(&mut *est, trace);

    let mut rows = Vec::new();
    let start = Instant::now();
    for id in oracle.heavy_hitters(cfg.problem.theta) {
        let truth = oracle.sorted(id).expect("heavy hitters have latencies");
        for &q in &cfg.qs {
            let a = est.query(id, q)?;
            let v = a.quantile_estimate;
            rows.push(Row {
                id,
                f_x: oracle.freq(id),
                f_hat: a.freq_estimate,
                q,
                quantile_estimate: v.map(|l| l.get()),
                percentage_error: v.map(|l| truth.percentage_error(l, q)),
            });
        }
    }
    let query_ns = start.elapsed().as_nanos() as f64;

    Ok(RunReport {
        algorithm: cfg.kind,
        theta: cfg.problem.theta,
        epsilon: cfg.problem.epsilon,
        delta: cfg.problem.delta,
        seed: cfg.problem.seed,
        p: cfg.filter.map_or(1.0, |f| f.p),
        alpha: cfg.filter.map(|f| f.alpha),
        n: est.elements_seen(),
        footprint: est.footprint(),
        footprint_bytes: cfg.bytes.then(|| est.footprint_bytes()),
        insert_ns_per_element: insert_ns / trace.len() as f64,
        query_ns_per_call: (cfg.time_queries && !rows.is_empty()).then(|| query_ns / rows.len() as f64),
        convergence_n: cfg.filter.map(|f| convergence_n(&cfg.problem, f.p, f.alpha)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hhq_core::workload::{generate, LatencyFamily, WorkloadSpec};

    fn trace() -> Vec<StreamElement> {
        generate(&WorkloadSpec { n: 20_000, universe: 200, zipf_s: 1.2, latency: LatencyFamily::LogNormal, seed: 1 })
            .unwrap()
    }

    #[test]
    fn one_row_per_heavy_hitter_and_q() {
        let t = trace();
        let cfg = RunConfig::new(EstimatorKind::Quasi, ProblemConfig::new(0.01, 0.05, 0.05, 1).unwrap());
        let r = run(&t, &cfg).unwrap();
        let oracle: ExactOracle = t.iter().copied().collect();
        assert_eq!(r.rows.len(), oracle.heavy_hitters(0.01).len() * 3);
        assert!(r.rows.iter().all(|row| row.f_x == oracle.freq(row.id)));
        assert!(r.max_error() <= 0.05);
        assert!(r.alpha.is_none());
    }

    #[test]
    fn filtered_runs_report_advisory() {
        let t = trace();
        let mut cfg = RunConfig::new(EstimatorKind::Squad, ProblemConfig::new(0.01, 0.05, 0.05, 1).unwrap());
        cfg.filter = Some(Filter { p: 0.5, alpha: 0.9 });
        let r = run(&t, &cfg).unwrap();
        assert_eq!(r.n, 20_000);
        assert_eq!(r.p, 0.5);
        assert!(r.convergence_n.unwrap() > 0.0);
    }
}
