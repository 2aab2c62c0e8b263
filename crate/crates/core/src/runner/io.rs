//! Readers for the CSV files written by the runner.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scaling::{LambdaPoint, Regime, ScalingCurve};

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).map_err(|e| parse_error(path, e))
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// One row of `index.csv`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct IndexRow {
    pub point: usize,
    #[serde(rename = "K")]
    pub kick: f64,
    pub epsilon: f64,
    pub status: String,
    pub gamma: Option<f64>,
    pub gamma_err: Option<f64>,
    pub regime: Option<String>,
    pub shape: Option<String>,
    pub p_loc: Option<f64>,
    pub sigma: Option<f64>,
    pub max_sites: Option<usize>,
}

impl IndexRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn regime(&self) -> Option<Regime> {
        self.regime.as_deref().and_then(|r| r.parse().ok())
    }
}

pub fn read_index(path: &Path) -> Result<Vec<IndexRow>> {
    reader(path)?
        .deserialize()
        .map(|r| r.map_err(|e| parse_error(path, e)))
        .collect()
}

#[derive(Deserialize)]
struct LambdaRow {
    #[serde(rename = "K")]
    kick: f64,
    t: u32,
    lambda: f64,
    lambda_err: f64,
}

/// Reads `K,t,lambda,lambda_err` rows, grouped into curves by K (in order
/// of first appearance).
pub fn read_lambda_csv(path: &Path) -> Result<Vec<ScalingCurve>> {
    let mut curves: Vec<ScalingCurve> = Vec::new();
    for row in reader(path)?.deserialize() {
        let row: LambdaRow = row.map_err(|e| parse_error(path, e))?;
        let point = LambdaPoint {
            t: row.t,
            lambda: row.lambda,
            err: row.lambda_err,
        };
        match curves.iter_mut().find(|c| c.kick == row.kick) {
            Some(c) => c.points.push(point),
            None => curves.push(ScalingCurve {
                kick: row.kick,
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

#[derive(Deserialize)]
struct XiRow {
    #[serde(rename = "K")]
    kick: f64,
    xi: f64,
}

/// Reads `(K, ξ)` pairs from a file with at least the columns `K` and `xi`.
pub fn read_xi_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut out = BTreeMap::new();
    for row in reader(path)?.deserialize() {
        let row: XiRow = row.map_err(|e| parse_error(path, e))?;
        out.insert(row.kick.to_bits(), (row.kick, row.xi));
    }
    let mut v: Vec<(f64, f64)> = out.into_values().collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(v)
}

/// Parses `key=value` lines, skipping blanks and `#` comments.
pub fn read_report(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}
