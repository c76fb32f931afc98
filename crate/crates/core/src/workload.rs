//! Synthetic Zipf traces with per-item latency distributions, and the
//! `id,latency` trace file format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::Uniform;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, weighted::WeightedAliasIndex};

use crate::error::{Error, Result};
use crate::rng::{seeded, StreamRng, SALT_WORKLOAD_IDS, SALT_WORKLOAD_PARAMS};
use crate::types::{ItemId, Latency, StreamElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatencyFamily {
    /// `exp(N(mu, sigma))` with `mu ~ U(ln 1e-4, ln 1e-3)`, `sigma ~ U(0.2, 1)`.
    #[default]
    LogNormal,
    /// `U(a, b)` with `a ~ U(0, 1e-3)` and `b - a ~ U(1e-4, 2e-3)`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    pub n: u64,
    pub universe: u64,
    pub zipf_s: f64,
    pub latency: LatencyFamily,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("trace length must be at least 1"));
        }
        if self.universe == 0 {
            return Err(Error::param("universe must be at least 1"));
        }
        if self.universe > u32::MAX as u64 {
            return Err(Error::param(format!("universe {} is too large", self.universe)));
        }
        if !(self.zipf_s >= 0.0 && self.zipf_s.is_finite()) {
            return Err(Error::param(format!("zipf exponent must be finite and >= 0, got {}", self.zipf_s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum ItemLatency {
    LogNormal(LogNormal<f64>),
    Uniform(Uniform<f64>),
}

impl ItemLatency {
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            ItemLatency::LogNormal(d) => d.sample(rng),
            ItemLatency::Uniform(d) => d.sample(rng),
        }
    }
}

/// Streams the elements of a [`WorkloadSpec`]. Item ids are the Zipf ranks
/// `1..=universe`.
#[derive(Debug, Clone)]
pub struct TraceGenerator {
    ids: WeightedAliasIndex<f64>,
    latencies: Vec<ItemLatency>,
    rng: StreamRng,
    remaining: u64,
}

impl TraceGenerator {
    pub fn new(spec: &WorkloadSpec) -> Result<Self> {
        spec.validate()?;
        let weights: Vec<f64> = (1..=spec.universe).map(|k| (k as f64).powf(-spec.zipf_s)).collect();
        let ids = WeightedAliasIndex::new(weights).map_err(|e| Error::param(format!("zipf weights: {e}")))?;

        let mut params = seeded(spec.seed, SALT_WORKLOAD_PARAMS);
        let latencies = (0..spec.universe)
            .map(|_| match spec.latency {
                LatencyFamily::LogNormal => {
                    let mu = params.random_range(1e-4f64.ln()..1e-3f64.ln());
                    let sigma = params.random_range(0.2..1.0);
                    ItemLatency::LogNormal(LogNormal::new(mu, sigma).expect("positive sigma"))
                }
                LatencyFamily::Uniform => {
                    let a = params.random_range(0.0..1e-3);
                    let b = a + params.random_range(1e-4..2e-3);
                    ItemLatency::Uniform(Uniform::new(a, b).expect("a < b"))
                }
            })
            .collect();

        Ok(TraceGenerator {
            ids,
            latencies,
            rng: seeded(spec.seed, SALT_WORKLOAD_IDS),
            remaining: spec.n,
        })
    }
}

impl Iterator for TraceGenerator {
    type Item = StreamElement;

    fn next(&mut self) -> Option<StreamElement> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let rank = self.ids.sample(&mut self.rng);
        let v = self.latencies[rank].sample(&mut self.rng);
        Some(StreamElement {
            id: ItemId(rank as u64 + 1),
            latency: Latency::new(v).expect("latency distributions are non-negative"),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

pub fn generate(spec: &WorkloadSpec) -> Result<Vec<StreamElement>> {
    Ok(TraceGenerator::new(spec)?.collect())
}

pub fn write_trace<'a>(elements: impl IntoIterator<Item = &'a StreamElement>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_elements(elements.into_iter().copied(), &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes `id,latency` lines; `{}` on `f64` prints the shortest decimal that
/// parses back to the same bits.
pub fn write_elements(elements: impl IntoIterator<Item = StreamElement>, w: &mut impl Write) -> Result<()> {
    for e in elements {
        writeln!(w, "{},{}", e.id.0, e.latency.get())?;
    }
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<StreamElement>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let (id, latency) = split_line(&line, i + 1)?;
        let id = id.parse::<u64>().map_err(|e| Error::Parse { line: i + 1, reason: format!("id {id:?}: {e}") })?;
        out.push(StreamElement { id: ItemId(id), latency });
    }
    Ok(out)
}

/// Like [`read_trace`] but accepts arbitrary id strings. Non-numeric ids are
/// hashed with 64-bit FNV-1a; the returned map recovers their names.
pub fn read_trace_with_ids(path: &Path) -> Result<(Vec<StreamElement>, HashMap<ItemId, String>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    let mut names: HashMap<ItemId, String> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let (raw, latency) = split_line(&line, i + 1)?;
        let id = match raw.parse::<u64>() {
            Ok(v) => ItemId(v),
            Err(_) => {
                let id = ItemId(fnv1a(raw.as_bytes()));
                match names.get(&id) {
                    Some(prev) if prev != raw => {
                        return Err(Error::Parse {
                            line: i + 1,
                            reason: format!("id {raw:?} collides with {prev:?}"),
                        })
                    }
                    Some(_) => {}
                    None => {
                        names.insert(id, raw.to_string());
                    }
                }
                id
            }
        };
        out.push(StreamElement { id, latency });
    }
    Ok((out, names))
}

fn split_line(line: &str, lineno: usize) -> Result<(&str, Latency)> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let (id, value) = line.split_once(',').ok_or_else(|| Error::Parse {
        line: lineno,
        reason: format!("expected \"id,latency\", got {line:?}"),
    })?;
    let id = id.trim();
    if id.is_empty() {
        return Err(Error::Parse { line: lineno, reason: "empty id".into() });
    }
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|e| Error::Parse { line: lineno, reason: format!("latency {value:?}: {e}") })?;
    let latency = Latency::new(v).map_err(|e| Error::Parse { line: lineno, reason: e.to_string() })?;
    Ok((id, latency))
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u64, universe: u64, zipf_s: f64) -> WorkloadSpec {
        WorkloadSpec { n, universe, zipf_s, latency: LatencyFamily::LogNormal, seed: 7 }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(TraceGenerator::new(&spec(0, 10, 1.0)).is_err());
        assert!(TraceGenerator::new(&spec(10, 0, 1.0)).is_err());
        assert!(TraceGenerator::new(&spec(10, 10, -1.0)).is_err());
        assert!(TraceGenerator::new(&spec(10, 10, f64::NAN)).is_err());
    }

    #[test]
    fn ids_stay_in_universe() {
        for e in TraceGenerator::new(&spec(10_000, 5, 0.5)).unwrap() {
            assert!((1..=5).contains(&e.id.0));
        }
    }

    #[test]
    fn uniform_family_respects_bounds() {
        let s = WorkloadSpec { latency: LatencyFamily::Uniform, ..spec(10_000, 3, 0.0) };
        for e in TraceGenerator::new(&s).unwrap() {
            assert!(e.latency.get() < 1e-3 + 2e-3);
        }
    }

    #[test]
    fn parses_one_line() {
        let (id, l) = split_line("17,0.00042", 1).unwrap();
        assert_eq!((id, l.get()), ("17", 0.00042));
    }

    #[test]
    fn malformed_lines_name_their_line() {
        for bad in ["abc", "1,", "1,x", "1,-2", "1,NaN", ",3"] {
            match split_line(bad, 4) {
                Err(Error::Parse { line: 4, .. }) => {}
                other => panic!("{bad:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
