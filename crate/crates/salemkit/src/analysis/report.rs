use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

pub const REPORT_SCHEMA: u32 = 1;

/// One pass/fail outcome tied to a named tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub tolerance: String,
    pub detail: String,
}

/// Named scalars, series and verdicts of one experiment run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub experiment: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub scalars: BTreeMap<String, f64>,
    /// `series[name] = [(scale index, value)]`.
    pub series: BTreeMap<String, Vec<(usize, f64)>>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, params: Value, seed: Option<u64>) -> Self {
        ExperimentReport {
            schema: REPORT_SCHEMA,
            experiment: experiment.to_string(),
            params,
            seed,
            ..Default::default()
        }
    }

    pub fn tolerance(&mut self, name: &str, value: f64) -> &mut Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn scalar(&mut self, name: &str, value: f64) -> &mut Self {
        self.scalars.insert(name.to_string(), value);
        self
    }

    pub fn push(&mut self, series: &str, index: usize, value: f64) -> &mut Self {
        self.series.entry(series.to_string()).or_default().push((index, value));
        self
    }

    /// Records a verdict; the tolerance must already be defined.
    pub fn verdict(&mut self, name: &str, pass: bool, tolerance: &str, detail: impl Into<String>) -> &mut Self {
        assert!(
            self.tolerances.contains_key(tolerance),
            "verdict {name} refers to undefined tolerance {tolerance}"
        );
        self.verdicts.push(Verdict {
            name: name.to_string(),
            pass,
            tolerance: tolerance.to_string(),
            detail: detail.into(),
        });
        self
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.pass).collect()
    }

    pub fn values(&self, series: &str) -> Vec<f64> {
        self.series.get(series).map(|s| s.iter().map(|&(_, v)| v).collect()).unwrap_or_default()
    }

    /// Appends every verdict and series of `other`, prefixing names.
    pub fn absorb(&mut self, prefix: &str, other: &ExperimentReport) {
        for (k, v) in &other.tolerances {
            self.tolerances.insert(format!("{prefix}.{k}"), *v);
        }
        for (k, v) in &other.scalars {
            self.scalars.insert(format!("{prefix}.{k}"), *v);
        }
        for (k, v) in &other.series {
            self.series.insert(format!("{prefix}.{k}"), v.clone());
        }
        for v in &other.verdicts {
            self.verdicts.push(Verdict {
                name: format!("{prefix}.{}", v.name),
                pass: v.pass,
                tolerance: format!("{prefix}.{}", v.tolerance),
                detail: v.detail.clone(),
            });
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// One CSV document per series with columns `scale_index,value`.
    pub fn to_csv(&self) -> Vec<(String, String)> {
        self.series
            .iter()
            .map(|(name, rows)| {
                let mut s = String::from("scale_index,value\n");
                for (i, v) in rows {
                    let _ = writeln!(s, "{i},{v:e}");
                }
                (name.clone(), s)
            })
            .collect()
    }
}

/// Least-squares slope of `log y` against `log x`, skipping non-positive entries.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Strictly increasing across every consecutive pair.
pub fn strictly_increasing(v: &[f64]) -> bool {
    v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0])
}

/// No step grows by more than the relative tolerance.
pub fn non_increasing_within(v: &[f64], rel: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + rel))
}
