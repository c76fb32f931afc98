//! Run reports and their CSV form.
//!
//! ```text
//! # schema=1
//! # algorithm=squad
//! # theta=0.01
//! ...
//! id,f_x,f_hat,q,quantile_estimate,percentage_error
//! 1,183812,183790.5,0.5,0.00031,0.0012
//! ```
//!
//! Metadata and summary metrics are `# key=value` comment lines, one per
//! key, so throughput can be filtered out when comparing bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use hhq_core::{EstimatorKind, ItemId};

pub const SCHEMA: &str = "1";
pub const ROW_HEADER: &str = "id,f_x,f_hat,q,quantile_estimate,percentage_error";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: ItemId,
    pub f_x: u64,
    pub f_hat: f64,
    pub q: f64,
    pub quantile_estimate: Option<f64>,
    /// `None` when the estimator gave no quantile for a heavy hitter.
    pub percentage_error: Option<f64>,
}

impl Row {
    /// A missing answer counts as the worst possible error.
    pub fn error_or_worst(&self) -> f64 {
        self.percentage_error.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: EstimatorKind,
    pub theta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Filter probability; 1 when unfiltered.
    pub p: f64,
    /// Filter tradeoff parameter, only for filtered runs.
    pub alpha: Option<f64>,
    pub n: u64,
    pub footprint: usize,
    pub footprint_bytes: Option<usize>,
    pub insert_ns_per_element: f64,
    pub query_ns_per_call: Option<f64>,
    /// Filter convergence advisory, only for filtered runs.
    pub convergence_n: Option<f64>,
    pub rows: Vec<Row>,
}

impl RunReport {
    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(Row::error_or_worst).fold(0.0, f64::max)
    }

    pub fn mean_error(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(Row::error_or_worst).sum::<f64>() / self.rows.len() as f64
    }

    pub fn heavy_hitters(&self) -> usize {
        let mut ids: Vec<ItemId> = self.rows.iter().map(|r| r.id).collect();
        ids.dedup();
        ids.len()
    }

    /// `(key, value)` metadata in emission order.
    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        let mut m = vec![
            ("algorithm", self.algorithm.to_string()),
            ("theta", self.theta.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("delta", self.delta.to_string()),
            ("seed", self.seed.to_string()),
            ("p", self.p.to_string()),
            ("n", self.n.to_string()),
            ("heavy_hitters", self.heavy_hitters().to_string()),
            ("rows", self.rows.len().to_string()),
            ("footprint", self.footprint.to_string()),
        ];
        if let Some(b) = self.footprint_bytes {
            m.push(("footprint_bytes", b.to_string()));
        }
        if let Some(a) = self.alpha {
            m.push(("alpha", a.to_string()));
        }
        if let Some(c) = self.convergence_n {
            m.push(("convergence_n", c.to_string()));
        }
        m.push(("max_error", self.max_error().to_string()));
        m.push(("mean_error", self.mean_error().to_string()));
        m.push(("insert_ns_per_element", format!("{:.3}", self.insert_ns_per_element)));
        if let Some(q) = self.query_ns_per_call {
            m.push(("query_ns_per_call", format!("{q:.3}")));
        }
        m
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema={SCHEMA}\n");
        for (k, v) in self.metadata() {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(ROW_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.id,
                r.f_x,
                r.f_hat,
                r.q,
                r.quantile_estimate.map(|v| v.to_string()).unwrap_or_default(),
                r.percentage_error.map(|v| v.to_string()).unwrap_or_default(),
            );
        }
        out
    }
}

/// The metadata block of a report file plus its row count.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub meta: BTreeMap<String, String>,
    pub rows: usize,
}

impl ParsedReport {
    pub fn metric(&self, key: &str) -> Result<f64> {
        let raw = self.meta.get(key).with_context(|| format!("report has no {key:?} entry"))?;
        raw.parse().with_context(|| format!("{key}={raw:?} is not a number"))
    }
}

pub fn parse_report(text: &str) -> Result<ParsedReport> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim() == format!("# schema={SCHEMA}") => {}
        Some(l) => bail!("unsupported schema line {l:?} (expected \"# schema={SCHEMA}\")"),
        None => bail!("empty report"),
    }
    let mut meta = BTreeMap::new();
    let mut header_seen = false;
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if let Some(kv) = line.strip_prefix("# ") {
            let (k, v) = kv.split_once('=').with_context(|| format!("line {}: malformed metadata {line:?}", i + 2))?;
            meta.insert(k.to_string(), v.to_string());
        } else if !header_seen {
            if line != ROW_HEADER {
                bail!("line {}: expected header {ROW_HEADER:?}, got {line:?}", i + 2);
            }
            header_seen = true;
        } else if !line.is_empty() {
            if line.split(',').count() != 6 {
                bail!("line {}: expected 6 fields", i + 2);
            }
            rows += 1;
        }
    }
    if !header_seen {
        bail!("report has no row header");
    }
    Ok(ParsedReport { meta, rows })
}
