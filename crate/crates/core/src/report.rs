//! CSV and JSON artifacts with an embedded run manifest.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cc::CcEstimate;
use crate::group::GroupSpec;
use crate::nondiff::ScanRow;
use crate::porosity::PorosityProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, parameters: serde_json::Value, seed: u64) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        let mut versions = BTreeMap::new();
        versions.insert("carnot-core".to_string(), env!("CARGO_PKG_VERSION").to_string());
        RunManifest { subcommand: subcommand.into(), parameters, seed, versions, timestamp }
    }

    pub fn header(&self) -> String {
        format!("# manifest {}\n", serde_json::to_string(self).expect("manifest serializes"))
    }

    /// Reads the manifest back from an artifact produced by [`Table::to_csv`].
    pub fn from_csv(text: &str) -> Option<RunManifest> {
        text.lines()
            .find_map(|l| l.strip_prefix("# manifest "))
            .and_then(|j| serde_json::from_str(j).ok())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self, manifest: &RunManifest) -> String {
        manifest.header() + &self.body()
    }
}

/// Lines of a CSV artifact that are not comments.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

pub fn json_report<T: Serialize>(manifest: &RunManifest, data: &T) -> String {
    let doc = serde_json::json!({ "manifest": manifest, "data": data });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

/// `scale, lambda_hat, witness_x…, witness_radius, mode`.
pub fn profile_table(p: &PorosityProfile) -> Table {
    let n = p.base.dim();
    let mut cols = vec!["scale".to_string(), "lambda_hat".into()];
    cols.extend((1..=n).map(|i| format!("witness_x{i}")));
    cols.extend(["witness_radius".to_string(), "mode".into()]);
    let mut t = Table::new(cols);
    let mode = serde_json::to_value(p.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    for (k, &s) in p.scales.iter().enumerate() {
        let mut row = vec![num(s), num(p.lambda_hat[k])];
        match &p.witnesses[k] {
            Some(w) => {
                row.extend(w.center.iter().map(|&c| num(c)));
                row.push(num(w.radius));
            }
            None => row.extend(std::iter::repeat_n(String::new(), n + 1)),
        }
        row.push(mode.clone());
        t.push(row);
    }
    t
}

/// `scale, max_quotient, witness_h…`.
pub fn scan_table(rows: &[ScanRow], n: usize) -> Table {
    let mut cols = vec!["scale".to_string(), "max_quotient".into()];
    cols.extend((1..=n).map(|i| format!("witness_h{i}")));
    let mut t = Table::new(cols);
    for r in rows {
        let mut row = vec![num(r.scale), num(r.max_quotient)];
        match &r.witness {
            Some(h) => row.extend(h.iter().map(|&c| num(c))),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        t.push(row);
    }
    t
}

/// `t, u₁…u_m, x₁…x_n` along the piecewise-constant control.
pub fn curve_table(est: &CcEstimate, spec: &GroupSpec, start: &[f64]) -> Table {
    let (m, n) = (spec.m(), spec.n());
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=m).map(|i| format!("u{i}")));
    cols.extend((1..=n).map(|i| format!("x{i}")));
    let mut t = Table::new(cols);
    let states = est.states(spec, start);
    let segs = est.controls.len();
    for (k, x) in states.iter().enumerate() {
        let mut row = vec![num(k as f64 / segs as f64)];
        let u = est.controls.get(k.min(segs.saturating_sub(1)));
        row.extend((0..m).map(|i| u.map(|u| num(u[i])).unwrap_or_default()));
        row.extend(x.iter().map(|&c| num(c)));
        t.push(row);
    }
    t
}
