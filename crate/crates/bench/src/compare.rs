//! Summary-metric diff between two run reports.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use crate::report::ParsedReport;

pub const DEFAULT_METRICS: [&str; 4] = ["footprint", "max_error", "mean_error", "insert_ns_per_element"];

/// Keys that must agree for two reports to be comparable at all.
const SCHEMA_KEYS: [&str; 2] = ["algorithm", "n"];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDelta {
    pub metric: String,
    pub left: f64,
    pub right: f64,
    pub tolerance: f64,
}

impl MetricDelta {
    /// `|right - left| / |left|`; zero when both are zero.
    pub fn relative(&self) -> f64 {
        if self.left == self.right {
            0.0
        } else if self.left == 0.0 {
            f64::INFINITY
        } else {
            ((self.right - self.left) / self.left).abs()
        }
    }

    pub fn within(&self) -> bool {
        self.relative() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub deltas: Vec<MetricDelta>,
}

impl Comparison {
    pub fn all_within(&self) -> bool {
        self.deltas.iter().all(MetricDelta::within)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("metric,left,right,delta,relative,tolerance,status\n");
        for d in &self.deltas {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                d.metric,
                d.left,
                d.right,
                d.right - d.left,
                d.relative(),
                d.tolerance,
                if d.within() { "ok" } else { "out-of-tolerance" }
            );
        }
        out
    }
}

/// Compares `metrics` between two reports. `tolerance_for` gives the
/// allowed relative delta per metric.
pub fn compare(
    left: &ParsedReport,
    right: &ParsedReport,
    metrics: &[String],
    tolerance_for: impl Fn(&str) -> f64,
) -> Result<Comparison> {
    for key in SCHEMA_KEYS {
        if !left.meta.contains_key(key) || !right.meta.contains_key(key) {
            bail!("schema mismatch: {key:?} missing");
        }
    }
    if left.meta["algorithm"] != right.meta["algorithm"] {
        bail!("schema mismatch: algorithm {} vs {}", left.meta["algorithm"], right.meta["algorithm"]);
    }
    let mut deltas = Vec::new();
    for m in metrics {
        deltas.push(MetricDelta {
            metric: m.clone(),
            left: left.metric(m)?,
            right: right.metric(m)?,
            tolerance: tolerance_for(m),
        });
    }
    Ok(Comparison { deltas })
}
