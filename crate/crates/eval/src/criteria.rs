use std::collections::HashMap;
use std::time::Instant;

use hhq_bench::run::timed_inserts;
use hhq_bench::{run_with_oracle, Filter, RunConfig, RunReport};
use hhq_core::estimators::{
    convergence_n, square_capacity, Estimator, FilteredEstimator, QuasiEstimator, SquadEstimator, SquareEstimator,
};
use hhq_core::heavy_hitters::SpaceSaving;
use hhq_core::oracle::{ExactOracle, SortedLatencies};
use hhq_core::rng::{seeded, CountingRng};
use hhq_core::sampling::{Reservoir, SamplingMode};
use hhq_core::workload::{LatencyFamily, TraceGenerator, WorkloadSpec};
use hhq_core::{EstimatorKind, ItemId, Latency, ProblemConfig, Sizing, StreamElement};
use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashMap;

use crate::stats::{chi_square_p, clopper_pearson_upper, log_log_slope, welch_p};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(id: u8, name: &'static str, pass: bool, detail: String) -> Self {
        Outcome { id, name, pass, detail }
    }
}

const QS: [f64; 3] = [0.5, 0.9, 0.99];

pub fn canonical_spec(n: u64) -> WorkloadSpec {
    WorkloadSpec { n, universe: 10_000, zipf_s: 1.2, latency: LatencyFamily::LogNormal, seed: 7 }
}

pub fn canonical_trace(n: u64) -> Vec<StreamElement> {
    TraceGenerator::new(&canonical_spec(n)).expect("valid spec").collect()
}

fn cfg(theta: f64, eps: f64, delta: f64, seed: u64) -> ProblemConfig {
    ProblemConfig::new(theta, eps, delta, seed).expect("valid problem parameters")
}

fn run(trace: &[StreamElement], oracle: &ExactOracle, kind: EstimatorKind, p: ProblemConfig) -> RunReport {
    let mut c = RunConfig::new(kind, p);
    c.qs = QS.to_vec();
    run_with_oracle(trace, oracle, &c).expect("run succeeds")
}

/// Deterministic QUASI accuracy on 20 Zipf traces.
pub fn quasi_determinism() -> Outcome {
    let start = Instant::now();
    let (mut checks, mut violations, mut worst) = (0u64, 0u64, 0.0f64);
    for zipf_s in [1.0, 1.2] {
        for seed in 1..=10 {
            let spec = WorkloadSpec { zipf_s, seed, ..canonical_spec(1_000_000) };
            let trace: Vec<StreamElement> = TraceGenerator::new(&spec).unwrap().collect();
            let oracle: ExactOracle = trace.iter().copied().collect();
            for eps in [0.1, 0.05] {
                let r = run(&trace, &oracle, EstimatorKind::Quasi, cfg(0.01, eps, 0.05, seed));
                for row in &r.rows {
                    checks += 1;
                    let e = row.error_or_worst();
                    worst = worst.max(e / eps);
                    if e > eps {
                        violations += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        1,
        "QUASI determinism",
        violations == 0 && checks > 0,
        format!(
            "{violations} violations in {checks} (trace, eps, heavy hitter, q) checks; worst error/eps = {worst:.3}; {secs:.1}s"
        ),
    )
}

/// GK rank guarantee over 1000 random streams in three insertion orders.
pub fn gk_determinism() -> Outcome {
    use hhq_core::sketch::GkSketch;
    let mut rng = seeded(2024, 2);
    let (mut checks, mut violations, mut floor_checks) = (0u64, 0u64, 0u64);
    for i in 0..1000usize {
        let eps = [0.01, 0.05, 0.1][i % 3];
        let n = rng.random_range(1..=10_000usize);
        let mut values: Vec<Latency> = (0..n).map(|_| Latency::new(rng.random::<f64>()).unwrap()).collect();
        match (i / 3) % 3 {
            0 => values.sort(),
            1 => values.sort_by(|a, b| b.cmp(a)),
            _ => values.shuffle(&mut rng),
        }
        let mut gk = GkSketch::new(eps).unwrap();
        for &v in &values {
            gk.insert(v);
        }
        let truth = SortedLatencies::new(values).unwrap();
        for j in 0..=100 {
            let q = j as f64 / 100.0;
            let err = truth.percentage_error(gk.quantile(q).unwrap(), q);
            // With fewer than 1/eps values some q sit more than eps away from
            // every attainable rank; there the answer must hit the closest one.
            let floor = truth.best_achievable_error(q);
            let allowed = if floor > eps {
                floor_checks += 1;
                floor
            } else {
                eps
            };
            checks += 1;
            if err > allowed + 1e-12 {
                violations += 1;
            }
        }
    }
    Outcome::new(
        2,
        "GK determinism",
        violations == 0,
        format!(
            "{violations} violations in {checks} checks; {floor_checks} checks had no stored value within eps and \
             were held to the best attainable rank"
        ),
    )
}

struct Tally {
    quantile_fail: u64,
    quantile_rows: u64,
    freq_fail: u64,
    freq_rows: u64,
}

impl Tally {
    fn quantile_upper(&self) -> f64 {
        clopper_pearson_upper(self.quantile_fail, self.quantile_rows, 0.95)
    }
    fn freq_upper(&self) -> f64 {
        clopper_pearson_upper(self.freq_fail, self.freq_rows, 0.95)
    }
}

fn tally(reports: &[RunReport], eps: f64, freq_tol: f64) -> Tally {
    let mut t = Tally { quantile_fail: 0, quantile_rows: 0, freq_fail: 0, freq_rows: 0 };
    for r in reports {
        for row in &r.rows {
            t.quantile_rows += 1;
            if row.error_or_worst() > eps {
                t.quantile_fail += 1;
            }
            if row.q == QS[0] {
                t.freq_rows += 1;
                if (row.f_hat - row.f_x as f64).abs() > freq_tol {
                    t.freq_fail += 1;
                }
            }
        }
    }
    t
}

fn seeded_reports(kind: EstimatorKind, trace: &[StreamElement], oracle: &ExactOracle, p: ProblemConfig) -> Vec<RunReport> {
    (0..50).map(|seed| run(trace, oracle, kind, ProblemConfig { seed, ..p })).collect()
}

/// SQUAD failure rates over 50 seeds.
pub fn squad_guarantee(trace: &[StreamElement], oracle: &ExactOracle) -> Outcome {
    let p = cfg(0.01, 0.05, 0.05, 0);
    let n = trace.len() as f64;
    let reports = seeded_reports(EstimatorKind::Squad, trace, oracle, p);
    let t = tally(&reports, p.epsilon, n * p.epsilon * p.theta);
    let (qu, fu) = (t.quantile_upper(), t.freq_upper());
    Outcome::new(
        3,
        "SQUAD statistical guarantee",
        qu <= p.delta && fu <= p.delta,
        format!(
            "quantile: {}/{} rows > eps, 95% upper {qu:.4}; frequency: {}/{} rows > N*eps*theta = {:.0}, 95% upper {fu:.4}; \
             delta = {}",
            t.quantile_fail,
            t.quantile_rows,
            t.freq_fail,
            t.freq_rows,
            n * p.epsilon * p.theta,
            p.delta
        ),
    )
}

/// SQUARE failure rates over 50 seeds, against its own frequency bound
/// `N eps sqrt(theta)`.
pub fn square_guarantee(trace: &[StreamElement], oracle: &ExactOracle) -> Outcome {
    let p = cfg(0.01, 0.05, 0.05, 0);
    let n = trace.len() as f64;
    let m = square_capacity(&p, 1.0).unwrap();
    let reports = seeded_reports(EstimatorKind::Square, trace, oracle, p);
    let tol = n * p.epsilon * p.theta.sqrt();
    let t = tally(&reports, p.epsilon, tol);
    let tight = tally(&reports, p.epsilon, n * p.epsilon * p.theta);
    let expected_fp = m.min(trace.len());
    let fp_ok = reports.iter().all(|r| r.footprint == expected_fp);
    let (qu, fu) = (t.quantile_upper(), t.freq_upper());
    Outcome::new(
        4,
        "SQUARE statistical guarantee",
        qu <= p.delta && fu <= p.delta && fp_ok,
        format!(
            "quantile: {}/{} rows > eps, 95% upper {qu:.4}; frequency: {}/{} rows > N*eps*sqrt(theta) = {tol:.0}, \
             95% upper {fu:.4}; footprint = min(N, M) = {expected_fp} on all seeds: {fp_ok}; \
             (rows > N*eps*theta: {}/{})",
            t.quantile_fail, t.quantile_rows, t.freq_fail, t.freq_rows, tight.freq_fail, tight.freq_rows
        ),
    )
}

fn footprint(kind: EstimatorKind, trace: &[StreamElement], p: ProblemConfig) -> usize {
    let mut e = hhq_core::build(kind, &p, &Sizing::default()).unwrap();
    for &x in trace {
        e.insert(x);
    }
    e.footprint()
}

/// Footprint ordering at eps = 0.025.
pub fn space_ordering(trace: &[StreamElement]) -> Outcome {
    let p = cfg(0.01, 0.025, 0.05, 0);
    let [square, quasi, squad] = EstimatorKind::ALL.map(|k| footprint(k, trace, p));
    Outcome::new(
        5,
        "Space ordering SQUAD < QUASI < SQUARE",
        squad < quasi && quasi < square,
        format!("footprints at eps = 0.025: SQUAD {squad}, QUASI {quasi}, SQUARE {square}"),
    )
}

/// Footprint scaling in eps for SQUARE and SQUAD.
pub fn scaling_exponents(trace: &[StreamElement]) -> Outcome {
    let grid: Vec<f64> = (0..4).map(|i| 0.1 * 2f64.powf(-(i as f64) / 3.0)).collect();
    let mut parts = Vec::new();
    let mut pass = true;
    for (kind, exponent) in [(EstimatorKind::Square, 2.0), (EstimatorKind::Squad, 1.5)] {
        let points: Vec<(f64, f64)> =
            grid.iter().map(|&e| (e, footprint(kind, trace, cfg(0.01, e, 0.05, 0)) as f64)).collect();
        let ratio = points[3].1 / points[0].1;
        let target = 2f64.powf(exponent);
        let slope = log_log_slope(&points);
        let ok = (ratio / target - 1.0).abs() <= 0.25 && (slope + exponent).abs() <= 0.3;
        pass &= ok;
        parts.push(format!(
            "{kind}: footprints {:?}, ratio(0.05/0.1) {ratio:.3} (target {target:.3} +-25%), slope {slope:.3} \
             (target -{exponent} +-0.3)",
            points.iter().map(|p| p.1 as u64).collect::<Vec<_>>()
        ));
    }
    Outcome::new(6, "Scaling exponents", pass, parts.join("; "))
}

/// Space Saving invariants on 200 random streams.
pub fn space_saving_properties() -> Outcome {
    let (mut checks, mut violations) = (0u64, 0u64);
    for i in 0..200u64 {
        let capacity = if i % 2 == 0 { 16 } else { 256 };
        let zipf_s = 0.6 + (i % 5) as f64 * 0.2;
        let spec = WorkloadSpec { n: 100_000, universe: 10_000, zipf_s, latency: LatencyFamily::Uniform, seed: 1000 + i };
        let mut ss = SpaceSaving::<()>::new(capacity);
        let mut freq: FxHashMap<ItemId, u64> = FxHashMap::default();
        for (j, x) in TraceGenerator::new(&spec).unwrap().enumerate() {
            ss.touch(x.id, || ());
            *freq.entry(x.id).or_default() += 1;
            if (j + 1) % 10_000 == 0 {
                checks += 1;
                if ss.iter().map(|e| e.count()).sum::<u64>() != (j + 1) as u64 || ss.total() != (j + 1) as u64 {
                    violations += 1;
                }
            }
        }
        let n = 100_000u64;
        for (&id, &f) in &freq {
            checks += 1;
            match ss.get(id) {
                Some(e) => {
                    if e.count() < f || (e.count() - f) * capacity as u64 > n {
                        violations += 1;
                    }
                }
                None => {
                    if f * capacity as u64 > n {
                        violations += 1;
                    }
                }
            }
        }
    }
    Outcome::new(7, "Space Saving properties", violations == 0, format!("{violations} violations in {checks} checks"))
}

fn inclusion_p(mode: SamplingMode) -> f64 {
    let (z, n, seeds, buckets) = (100usize, 100_000u64, 500u64, 50usize);
    let mut counts = vec![0u64; buckets];
    for seed in 0..seeds {
        let mut r = Reservoir::new(z, mode, seeded(seed, 8080));
        for pos in 0..n {
            r.offer(pos);
        }
        for &pos in r.slots() {
            counts[(pos * buckets as u64 / n) as usize] += 1;
        }
    }
    let expected = vec![(seeds * z as u64) as f64 / buckets as f64; buckets];
    chi_square_p(&counts, &expected)
}

fn admissions(mode: SamplingMode, z: usize, n: u64, seed: u64) -> (u64, u64) {
    let mut r = Reservoir::new(z, mode, CountingRng::new(seeded(seed, 8181)));
    let admitted = (0..n).filter(|&i| r.offer(i)).count() as u64;
    (admitted, r.rng().draws())
}

/// Reservoir uniformity and the skip-based sampler's draw count.
pub fn reservoir_sampling() -> Outcome {
    let p_naive = inclusion_p(SamplingMode::Naive);
    let p_skip = inclusion_p(SamplingMode::SkipL);
    let (z, n) = (64usize, 1_000_000u64);
    let bound = 8.0 * z as f64 * (1.0 + (n as f64 / z as f64).ln());
    let naive: Vec<f64> = (0..200).map(|s| admissions(SamplingMode::Naive, z, n, s).0 as f64).collect();
    let skip_runs: Vec<(u64, u64)> = (0..200).map(|s| admissions(SamplingMode::SkipL, z, n, 10_000 + s)).collect();
    let skip: Vec<f64> = skip_runs.iter().map(|r| r.0 as f64).collect();
    let max_draws = skip_runs.iter().map(|r| r.1).max().unwrap();
    let p_two = welch_p(&naive, &skip);
    Outcome::new(
        8,
        "Reservoir uniformity and skip sampling",
        p_naive > 0.001 && p_skip > 0.001 && (max_draws as f64) <= bound && p_two > 0.001,
        format!(
            "inclusion chi-square p: naive {p_naive:.4}, skip {p_skip:.4}; max RNG draws {max_draws} <= {bound:.0}; \
             admission-count Welch p {p_two:.4}"
        ),
    )
}

fn best_ns(est_factory: impl Fn() -> Box<dyn Estimator>, trace: &[StreamElement], rounds: usize) -> f64 {
    (0..rounds)
        .map(|_| {
            let mut e = est_factory();
            timed_inserts(&mut *e, trace)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Pre-filter speedup, and accuracy beyond the convergence threshold.
pub fn filter_optimization() -> Outcome {
    let p = cfg(0.01, 0.05, 0.05, 0);
    let (prob, alpha) = (0.1, 0.9);
    let sizing = Sizing::default();

    let trace = canonical_trace(10_000_000);
    let plain = RunConfig::new(EstimatorKind::Squad, p);
    let filtered = RunConfig { filter: Some(Filter { p: prob, alpha }), ..plain.clone() };
    let mut plain_ns = f64::INFINITY;
    let mut filtered_ns = f64::INFINITY;
    for _ in 0..3 {
        plain_ns = plain_ns.min(best_ns(|| plain.build().unwrap(), &trace, 1));
        filtered_ns = filtered_ns.min(best_ns(|| filtered.build().unwrap(), &trace, 1));
    }
    drop(trace);
    let speedup = plain_ns / filtered_ns;

    // Accuracy at the advisory stream length, streamed twice.
    let n = convergence_n(&p, prob, alpha) as u64;
    let spec = canonical_spec(n);
    let inner_cfg = FilteredEstimator::<SquadEstimator>::inner_config(&p, alpha).unwrap();
    let mut ests: Vec<FilteredEstimator<SquadEstimator>> = (0..50)
        .map(|seed| {
            let c = ProblemConfig { seed, ..inner_cfg };
            FilteredEstimator::new(SquadEstimator::new(&c, &sizing).unwrap(), prob, alpha, seed).unwrap()
        })
        .collect();
    let mut freq = vec![0u64; spec.universe as usize + 1];
    for x in TraceGenerator::new(&spec).unwrap() {
        freq[x.id.0 as usize] += 1;
        for e in &mut ests {
            e.insert(x);
        }
    }
    let heavy: Vec<ItemId> = (1..freq.len())
        .filter(|&i| freq[i] as f64 >= p.theta * n as f64)
        .map(|i| ItemId(i as u64))
        .collect();
    let freq_tol = n as f64 * p.epsilon * p.theta;
    let (mut freq_fail, mut freq_rows) = (0u64, 0u64);
    // Per heavy hitter: sorted answers with their (seed, q) owners.
    let mut answers: HashMap<ItemId, Vec<(Latency, usize)>> = HashMap::new();
    let mut missing = 0u64;
    for &id in &heavy {
        let list = answers.entry(id).or_default();
        for e in &ests {
            for (qi, &q) in QS.iter().enumerate() {
                let a = e.query(id, q).unwrap();
                if qi == 0 {
                    freq_rows += 1;
                    if (a.freq_estimate - freq[id.0 as usize] as f64).abs() > freq_tol {
                        freq_fail += 1;
                    }
                }
                match a.quantile_estimate {
                    Some(v) => list.push((v, qi)),
                    None => missing += 1,
                }
            }
        }
        list.sort();
    }
    drop(ests);
    // Count, for each answer, how many latencies of its item are <= it.
    let mut at_or_below: HashMap<ItemId, Vec<u64>> =
        answers.iter().map(|(&id, l)| (id, vec![0u64; l.len() + 1])).collect();
    for x in TraceGenerator::new(&spec).unwrap() {
        if let Some(list) = answers.get(&x.id) {
            let idx = list.partition_point(|&(v, _)| v < x.latency);
            at_or_below.get_mut(&x.id).unwrap()[idx] += 1;
        }
    }
    let (mut q_fail, mut q_rows) = (missing, missing);
    for (id, list) in &answers {
        let f = freq[id.0 as usize] as f64;
        let mut cum = 0u64;
        let diff = &at_or_below[id];
        for (j, &(_, qi)) in list.iter().enumerate() {
            cum += diff[j];
            let rank = cum as f64 / f;
            q_rows += 1;
            if (rank - QS[qi]).abs() > p.epsilon {
                q_fail += 1;
            }
        }
    }
    let qu = clopper_pearson_upper(q_fail, q_rows, 0.95);
    let fu = clopper_pearson_upper(freq_fail, freq_rows, 0.95);
    Outcome::new(
        9,
        "Filter optimization",
        speedup >= 3.0 && qu <= p.delta && fu <= p.delta,
        format!(
            "insert ns/element on 1e7: unfiltered {:.1}, p = 0.1 {:.1}, speedup {speedup:.2}x; at N = {n} \
             (convergence advisory): quantile {q_fail}/{q_rows} rows > eps, 95% upper {qu:.4}; frequency \
             {freq_fail}/{freq_rows} rows > N*eps*theta, 95% upper {fu:.4}; {} heavy hitters",
            plain_ns / 1e7,
            filtered_ns / 1e7,
            heavy.len()
        ),
    )
}

/// Every estimator is exact when its capacities cover the stream.
pub fn exactness_degeneration() -> Outcome {
    let (mut checks, mut violations) = (0u64, 0u64);
    for seed in 0..100u64 {
        let mut rng = seeded(seed, 31);
        let n = rng.random_range(1..=500usize);
        let stream: Vec<StreamElement> = (0..n)
            .map(|_| StreamElement::new(rng.random_range(0..12), rng.random::<f64>()).unwrap())
            .collect();
        let oracle: ExactOracle = stream.iter().copied().collect();
        let mut ests: Vec<Box<dyn Estimator>> = vec![
            Box::new(SquareEstimator::with_capacity(n, SamplingMode::SkipL, seed)),
            Box::new(QuasiEstimator::with_capacity(n, 1e-9).unwrap()),
            Box::new(SquadEstimator::with_capacities(n, n, 1e-4, 1, SamplingMode::SkipL, seed).unwrap()),
        ];
        for e in &mut ests {
            for &x in &stream {
                e.insert(x);
            }
            for id in (0..12).map(ItemId) {
                let f = oracle.freq(id);
                checks += 1;
                if e.query(id, 0.5).unwrap().freq_estimate != f as f64 {
                    violations += 1;
                }
                let Some(truth) = oracle.sorted(id) else { continue };
                for j in 0..=20 {
                    let q = j as f64 / 20.0;
                    checks += 1;
                    match e.query(id, q).unwrap().quantile_estimate {
                        Some(v) if truth.percentage_error(v, q) <= 1.0 / f as f64 + 1e-12 => {}
                        _ => violations += 1,
                    }
                }
            }
        }
    }
    Outcome::new(10, "Exactness degeneration", violations == 0, format!("{violations} violations in {checks} checks"))
}
