//! Parameter sweep along a line in the (K, ε) plane.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::observables::{
    fit_shape, pi0_inverse_squared, write_distributions_csv, MomentumDistribution, ShapeFit,
    TimeSeries,
};
use crate::scaling::growth::last_decade;
use crate::scaling::{
    classify_regime, fit_growth_exponent, lambda_series, GrowthExponent, Regime, ScalingCurve,
};

use super::config::RunConfig;
use super::ensemble::{run_ensemble, Ensemble};
use super::manifest::write_manifest;

pub const INDEX_FILE: &str = "index.csv";
pub const CONFIG_FILE: &str = "config.toml";

pub fn timeseries_file(point: usize) -> String {
    format!("point_{point:03}_timeseries.csv")
}

pub fn momentum_file(point: usize) -> String {
    format!("point_{point:03}_momentum.csv")
}

pub fn lambda_file(point: usize) -> String {
    format!("point_{point:03}_lambda.csv")
}

/// Results of one successful sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub series: TimeSeries,
    pub distribution: MomentumDistribution,
    pub typical: MomentumDistribution,
    pub curve: ScalingCurve,
    pub growth: Option<GrowthExponent>,
    pub regime: Option<Regime>,
    /// Shape of the typical distribution.
    pub shape: Option<ShapeFit>,
    pub max_sites: usize,
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub index: usize,
    pub kick: f64,
    pub epsilon: f64,
    pub result: std::result::Result<PointData, String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<PointOutcome>,
    pub files: Vec<String>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_err()).count()
    }
}

/// Growth exponent over the last decade and the regime it implies.
pub fn growth_and_regime(series: &TimeSeries, delta: f64) -> Result<(GrowthExponent, Regime)> {
    let inv = pi0_inverse_squared(series)?;
    let t_max = *series.times.last().ok_or(Error::EmptyEnsemble)?;
    let growth = fit_growth_exponent(&inv, last_decade(t_max))?;
    Ok((growth, classify_regime(growth.gamma, delta)))
}

fn analyse_point(cfg: &RunConfig, e: Ensemble, kick: f64) -> Result<PointData> {
    let Ensemble {
        series,
        distribution,
        typical,
        max_sites,
    } = e;
    let inv = pi0_inverse_squared(&series)?;
    let window_start = cfg
        .analysis
        .window_start
        .min(*series.times.last().unwrap_or(&1))
        .max(1);
    let curve = lambda_series(kick, &inv, window_start, None)?;
    let (growth, regime) = match growth_and_regime(&series, cfg.analysis.delta) {
        Ok((g, r)) => (Some(g), Some(r)),
        Err(Error::InsufficientSpan { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    let shape = fit_shape(&typical).ok();
    Ok(PointData {
        series,
        distribution,
        typical,
        curve,
        growth,
        regime,
        shape,
        max_sites,
    })
}

fn write_file(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(dir.join(name))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

/// Runs every sweep point, writing per-point CSVs, `index.csv`, a config
/// snapshot and the manifest into `out_dir`. A failing point is reported in
/// the index and skipped; it never aborts the others.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<SweepOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let times = cfg.record_times();
    let mut files = Vec::new();
    let mut points = Vec::new();
    for point in cfg.sweep_points() {
        let p = &point.params;
        let result = run_ensemble(
            p,
            cfg.sweep.n_realizations,
            cfg.sweep.master_seed,
            point.index as u64,
            &times,
            cfg.physics.phase_mode,
        )
        .and_then(|e| analyse_point(cfg, e, p.kick));
        let result = match result {
            Ok(data) => {
                let names = [
                    timeseries_file(point.index),
                    momentum_file(point.index),
                    lambda_file(point.index),
                ];
                write_file(out_dir, &names[0], |w| data.series.write_csv(w))?;
                write_file(out_dir, &names[1], |w| {
                    write_distributions_csv(&data.distribution, &data.typical, w)
                })?;
                write_file(out_dir, &names[2], |w| data.curve.write_csv(w, true))?;
                files.extend(names);
                Ok(data)
            }
            Err(e) => Err(e.to_string()),
        };
        points.push(PointOutcome {
            index: point.index,
            kick: p.kick,
            epsilon: p.epsilon,
            result,
        });
    }

    write_file(out_dir, INDEX_FILE, |w| {
        writeln!(
            w,
            "point,K,epsilon,status,gamma,gamma_err,regime,shape,p_loc,sigma,max_sites"
        )?;
        for pt in &points {
            match &pt.result {
                Ok(d) => writeln!(
                    w,
                    "{},{},{},ok,{},{},{},{},{},{},{}",
                    pt.index,
                    pt.kick,
                    pt.epsilon,
                    opt(d.growth.map(|g| g.gamma)),
                    opt(d.growth.map(|g| g.err)),
                    d.regime.map_or("", |r| r.as_str()),
                    d.shape.map_or("", |s| s.kind.as_str()),
                    opt(d.shape.and_then(|s| s.p_loc)),
                    opt(d.shape.and_then(|s| s.sigma)),
                    d.max_sites
                )?,
                Err(msg) => writeln!(
                    w,
                    "{},{},{},failed: {},,,,,,,",
                    pt.index,
                    pt.kick,
                    pt.epsilon,
                    msg.replace(',', ";")
                )?,
            }
        }
        Ok(())
    })?;
    files.push(INDEX_FILE.to_string());
    fs::write(out_dir.join(CONFIG_FILE), cfg.to_toml())?;
    files.push(CONFIG_FILE.to_string());
    write_manifest(
        out_dir,
        &files,
        &[
            format!("master_seed={}", cfg.sweep.master_seed),
            format!("config={CONFIG_FILE}"),
        ],
    )?;
    Ok(SweepOutcome { points, files })
}
