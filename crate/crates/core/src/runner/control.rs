//! Classical control run: the modulated standard map at every sweep point.

use std::io::Write;

use crate::classical::{classical_diffusion, ClassicalDiffusion};
use crate::error::Result;
use crate::params::derive_seed;

use super::config::RunConfig;

pub const CLASSICAL_FILE: &str = "classical_check.csv";

/// Accepted range of the classical growth exponent.
pub const GAMMA_CL_RANGE: (f64, f64) = (0.9, 1.1);

#[derive(Debug, Clone)]
pub struct ClassicalPoint {
    pub index: usize,
    pub kick: f64,
    pub epsilon: f64,
    pub result: std::result::Result<ClassicalDiffusion, String>,
}

impl ClassicalPoint {
    /// True when the point failed or its exponent lies outside
    /// [`GAMMA_CL_RANGE`].
    pub fn flagged(&self) -> bool {
        match &self.result {
            Ok(d) => !(d.gamma >= GAMMA_CL_RANGE.0 && d.gamma <= GAMMA_CL_RANGE.1),
            Err(_) => true,
        }
    }
}

/// Realization index reserved for the classical stream of a point, so its
/// seed never coincides with a quantum realization's.
pub const CLASSICAL_STREAM: u64 = 1 << 63;

/// Runs the classical map at every sweep point; point `i` is seeded with
/// `derive_seed(master_seed, i, CLASSICAL_STREAM)`.
pub fn run_classical_check(cfg: &RunConfig) -> Result<Vec<ClassicalPoint>> {
    cfg.validate()?;
    let c = &cfg.classical;
    Ok(cfg
        .sweep_points()
        .into_iter()
        .map(|pt| {
            let seed = derive_seed(cfg.sweep.master_seed, pt.index as u64, CLASSICAL_STREAM);
            ClassicalPoint {
                index: pt.index,
                kick: pt.params.kick,
                epsilon: pt.params.epsilon,
                result: classical_diffusion(
                    &pt.params,
                    c.n_trajectories,
                    c.n_kicks,
                    seed,
                    cfg.physics.phase_mode,
                )
                .map_err(|e| e.to_string()),
            }
        })
        .collect())
}

pub fn write_classical_check<W: Write>(points: &[ClassicalPoint], mut out: W) -> Result<()> {
    writeln!(
        out,
        "point,K,epsilon,status,gamma_cl,gamma_cl_err,diffusion,flag"
    )?;
    for p in points {
        match &p.result {
            Ok(d) => writeln!(
                out,
                "{},{},{},ok,{:e},{:e},{:e},{}",
                p.index,
                p.kick,
                p.epsilon,
                d.gamma,
                d.gamma_err,
                d.diffusion,
                p.flagged()
            )?,
            Err(e) => writeln!(
                out,
                "{},{},{},failed: {},,,,true",
                p.index,
                p.kick,
                p.epsilon,
                e.replace(',', ";")
            )?,
        }
    }
    Ok(())
}
