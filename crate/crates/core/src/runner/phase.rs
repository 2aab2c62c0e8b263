//! Regime classification on a (K, ε) grid.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::scaling::{GrowthExponent, Regime};

use super::config::{record_times, RunConfig};
use super::ensemble::run_ensemble;
use super::sweep::growth_and_regime;

pub const PHASE_FILE: &str = "phase_diagram.csv";
pub const MONOTONICITY_FILE: &str = "monotonicity.txt";

#[derive(Debug, Clone)]
pub struct Cell {
    pub kick: f64,
    pub epsilon: f64,
    pub result: std::result::Result<(GrowthExponent, Regime), String>,
}

#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub k_values: Vec<f64>,
    pub eps_values: Vec<f64>,
    /// Row-major: ε outer, K inner.
    pub cells: Vec<Cell>,
}

/// Rows of constant ε whose regime is not monotone in K.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub epsilon: f64,
    pub sequence: Vec<Option<Regime>>,
}

fn grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| min + step * i as f64).collect()
}

fn rank(r: Regime) -> u8 {
    match r {
        Regime::Localized => 0,
        Regime::Critical => 1,
        Regime::Diffusive => 2,
    }
}

impl PhaseDiagram {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    /// Along increasing K at fixed ε the regime may only move from
    /// localized towards diffusive. Failed cells are skipped.
    pub fn violations(&self) -> Vec<Violation> {
        self.cells
            .chunks(self.k_values.len())
            .filter_map(|row| {
                let seq: Vec<Option<Regime>> = row
                    .iter()
                    .map(|c| c.result.as_ref().ok().map(|r| r.1))
                    .collect();
                let ranks: Vec<u8> = seq.iter().flatten().map(|&r| rank(r)).collect();
                (!ranks.windows(2).all(|w| w[0] <= w[1])).then(|| Violation {
                    epsilon: row[0].epsilon,
                    sequence: seq,
                })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "K,epsilon,status,gamma,gamma_err,regime")?;
        for c in &self.cells {
            match &c.result {
                Ok((g, r)) => writeln!(
                    out,
                    "{},{},ok,{:e},{:e},{}",
                    c.kick,
                    c.epsilon,
                    g.gamma,
                    g.err,
                    r.as_str()
                )?,
                Err(e) => writeln!(
                    out,
                    "{},{},failed: {},,,",
                    c.kick,
                    c.epsilon,
                    e.replace(',', ";")
                )?,
            }
        }
        Ok(())
    }

    pub fn monotonicity_report(&self) -> String {
        let v = self.violations();
        let mut s = String::new();
        let _ = writeln!(s, "rows={}", self.eps_values.len());
        let _ = writeln!(s, "violations={}", v.len());
        for row in v {
            let seq: Vec<&str> = row
                .sequence
                .iter()
                .map(|r| r.map_or("failed", |r| r.as_str()))
                .collect();
            let _ = writeln!(s, "epsilon={} sequence={}", row.epsilon, seq.join(" "));
        }
        s
    }
}

/// Classifies every cell of the configured grid. Cell `i` (row-major) uses
/// point index `i` for seeding.
pub fn run_phase_diagram(cfg: &RunConfig) -> Result<PhaseDiagram> {
    cfg.validate()?;
    let pd = &cfg.phase_diagram;
    let k_values = grid(pd.k_min, pd.k_max, pd.k_step);
    let eps_values = grid(pd.eps_min, pd.eps_max, pd.eps_step);
    let times = record_times(
        pd.n_kicks,
        cfg.sweep.dense_until,
        cfg.sweep.log_points_per_decade,
    );
    let mut cells = Vec::new();
    for &epsilon in &eps_values {
        for &kick in &k_values {
            let index = cells.len() as u64;
            let params = cfg.physics.params(kick, epsilon, pd.n_kicks);
            let result = params
                .validate()
                .and_then(|_| {
                    run_ensemble(
                        &params,
                        pd.n_realizations,
                        cfg.sweep.master_seed,
                        index,
                        &times,
                        cfg.physics.phase_mode,
                    )
                })
                .and_then(|e| growth_and_regime(&e.series, pd.delta))
                .map_err(|e| e.to_string());
            cells.push(Cell {
                kick,
                epsilon,
                result,
            });
        }
    }
    Ok(PhaseDiagram {
        k_values,
        eps_values,
        cells,
    })
}

/// Writes the grid CSV and the monotonicity report into `dir`.
pub fn write_phase_diagram(pd: &PhaseDiagram, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join(PHASE_FILE))?);
    pd.write_csv(&mut w)?;
    w.flush()?;
    fs::write(dir.join(MONOTONICITY_FILE), pd.monotonicity_report())?;
    Ok(vec![PHASE_FILE.into(), MONOTONICITY_FILE.into()])
}
