//! Grid of runs over algorithms, epsilons and seeds.

use std::fmt::Write as _;

use anyhow::{ensure, Result};
use hhq_core::{EstimatorKind, ExactOracle, ProblemConfig, StreamElement};

use crate::report::SCHEMA;
use crate::run::{run_with_oracle, RunConfig};

pub const SWEEP_HEADER: &str = "algorithm,epsilon,seed,footprint,max_error,mean_error,insert_ns_per_element";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: EstimatorKind,
    pub epsilon: f64,
    pub seed: u64,
    pub footprint: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub insert_ns_per_element: f64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub algorithms: Vec<EstimatorKind>,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Template; its algorithm, epsilon and seed are overridden per cell.
    pub base: RunConfig,
}

pub fn sweep(trace: &[StreamElement], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    ensure!(!cfg.algorithms.is_empty(), "no algorithms given");
    ensure!(!cfg.epsilons.is_empty(), "epsilon grid is empty");
    ensure!(!cfg.seeds.is_empty(), "no seeds given");
    let oracle: ExactOracle = trace.iter().copied().collect();
    let mut rows = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &epsilon in &cfg.epsilons {
            for &seed in &cfg.seeds {
                let p = cfg.base.problem;
                let mut run_cfg = cfg.base.clone();
                run_cfg.kind = algorithm;
                run_cfg.problem = ProblemConfig::new(p.theta, epsilon, p.delta, seed)?;
                let r = run_with_oracle(trace, &oracle, &run_cfg)?;
                rows.push(SweepRow {
                    algorithm,
                    epsilon,
                    seed,
                    footprint: r.footprint,
                    max_error: r.max_error(),
                    mean_error: r.mean_error(),
                    insert_ns_per_element: r.insert_ns_per_element,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.algorithm, a.seed)
            .cmp(&(b.algorithm, b.seed))
            .then(b.epsilon.total_cmp(&a.epsilon))
    });
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("# schema={SCHEMA}\n{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.3}",
            r.algorithm, r.epsilon, r.seed, r.footprint, r.max_error, r.mean_error, r.insert_ns_per_element
        );
    }
    out
}
