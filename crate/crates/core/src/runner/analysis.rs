//! Scaling analysis of a sweep dataset: Λ curves, collapse, critical fit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit, LmOptions};
use crate::scaling::{
    classify_regime, collapse, fit_critical, global_fit, log_binned, Branch, CollapseOptions,
    CollapseResult, CriticalFit, CriticalFitOptions, GlobalFit, Regime, ScalingCurve,
};

use super::config::{AnalysisConfig, RunConfig};
use super::io::{read_index, read_lambda_csv};
use super::sweep::{lambda_file, CONFIG_FILE, INDEX_FILE};

pub const LAMBDA_ALL_FILE: &str = "lambda_all.csv";
pub const COLLAPSE_FILE: &str = "collapse.csv";
pub const F_SAMPLES_FILE: &str = "f_samples.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.txt";

/// Fraction of a branch's ln u range, at its small-u end, used for the
/// asymptotic slope.
pub const ASYMPTOTE_FRACTION: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub window_start: u32,
    pub window_end: Option<u32>,
    pub delta: f64,
    pub gauge_k: f64,
    /// Average Λ over log-spaced bins of t before the collapse.
    pub bins_per_decade: Option<u32>,
    /// Minimum bin width in kicks.
    pub min_bin_kicks: u32,
    pub collapse: CollapseOptions,
    pub critical: CriticalFitOptions,
    /// Also run the global one-shot fit.
    pub global: bool,
    pub global_lm: LmOptions,
}

impl AnalysisOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        let a: &AnalysisConfig = &cfg.analysis;
        Self {
            window_start: a.window_start,
            window_end: a.window_end,
            delta: a.delta,
            gauge_k: cfg.gauge_k(),
            bins_per_decade: (a.bins_per_decade > 0).then_some(a.bins_per_decade),
            min_bin_kicks: a.min_bin_kicks,
            collapse: CollapseOptions::default(),
            critical: CriticalFitOptions {
                shared_alpha: a.shared_alpha,
                lm: LmOptions::default(),
            },
            global: a.global_fit,
            global_lm: LmOptions {
                max_iterations: 2000,
                cost_tol: 1e-12,
                ..LmOptions::default()
            },
        }
    }
}

/// Log-log slope of one branch of f at its small-u end.
#[derive(Debug, Clone, Copy)]
pub struct BranchSlope {
    pub branch: Branch,
    pub fit: LineFit,
    pub u_max: f64,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    /// Curves as used by the collapse (after windowing and binning).
    pub curves: Vec<ScalingCurve>,
    pub regimes: Vec<Regime>,
    pub collapse: CollapseResult,
    pub slopes: Vec<BranchSlope>,
    pub critical: std::result::Result<CriticalFit, String>,
    pub global: Option<std::result::Result<GlobalFit, String>>,
}

/// Slope of ln f against ln u over the smallest-u `fraction` of a branch.
pub fn small_u_slope(
    result: &CollapseResult,
    branch: Branch,
    fraction: f64,
) -> Result<BranchSlope> {
    let pts: Vec<(f64, f64)> = result
        .branch_samples(branch)
        .map(|p| (p.u.ln(), p.lambda.ln()))
        .collect();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    let cut = lo + fraction * (hi - lo);
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().filter(|p| p.0 <= cut).unzip();
    let fit = fit_line(&x, &y, None)?;
    Ok(BranchSlope {
        branch,
        fit,
        u_max: cut.exp(),
    })
}

/// Runs the collapse, the slopes and the critical fit on prepared curves.
pub fn analyse_curves(
    curves: Vec<ScalingCurve>,
    regimes: Vec<Regime>,
    opts: &AnalysisOptions,
) -> Result<Analysis> {
    let curves: Vec<ScalingCurve> = curves
        .into_iter()
        .map(|c| {
            let end = opts.window_end.unwrap_or(u32::MAX);
            let c = ScalingCurve {
                kick: c.kick,
                points: c
                    .points
                    .into_iter()
                    .filter(|p| p.t >= opts.window_start && p.t <= end)
                    .collect(),
            };
            match opts.bins_per_decade {
                Some(b) => log_binned(&c, b, opts.min_bin_kicks),
                None => c,
            }
        })
        .collect();
    let collapse = collapse(&curves, &regimes, opts.gauge_k, &opts.collapse)?;
    let slopes = [Branch::Localized, Branch::Diffusive]
        .into_iter()
        .filter_map(|b| small_u_slope(&collapse, b, ASYMPTOTE_FRACTION).ok())
        .collect();
    let xi: Vec<(f64, f64)> = collapse.xi.iter().map(|c| (c.kick, c.xi)).collect();
    let critical = fit_critical(&xi, &opts.critical).map_err(|e| e.to_string());
    let global = opts.global.then(|| match &critical {
        Ok(c) => {
            let kept: Vec<ScalingCurve> = curves
                .iter()
                .filter(|c| !collapse.excluded.contains(&c.kick))
                .cloned()
                .collect();
            global_fit(&kept, &c.params, opts.global_lm).map_err(|e| e.to_string())
        }
        Err(e) => Err(format!("needs a critical fit to start from: {e}")),
    });
    Ok(Analysis {
        curves,
        regimes,
        collapse,
        slopes,
        critical,
        global,
    })
}

/// Loads a sweep directory and analyses every successful point that has a
/// growth exponent. Regimes are reclassified with `opts.delta`.
pub fn analyse_dataset(dir: &Path, opts: &AnalysisOptions) -> Result<Analysis> {
    let index = read_index(&dir.join(INDEX_FILE))?;
    let mut curves = Vec::new();
    let mut regimes = Vec::new();
    for row in index.iter().filter(|r| r.ok()) {
        let Some(gamma) = row.gamma else { continue };
        let mut c = read_lambda_csv(&dir.join(lambda_file(row.point)))?;
        if c.len() != 1 {
            return Err(Error::InsufficientData(format!(
                "{} holds {} curves",
                lambda_file(row.point),
                c.len()
            )));
        }
        curves.push(c.remove(0));
        regimes.push(classify_regime(gamma, opts.delta));
    }
    if curves.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable curves, need at least 3",
            curves.len()
        )));
    }
    analyse_curves(curves, regimes, opts)
}

/// Loads the options stored with a dataset, falling back to defaults.
pub fn dataset_config(dir: &Path) -> Result<RunConfig> {
    let path = dir.join(CONFIG_FILE);
    if path.exists() {
        RunConfig::load(&path)
    } else {
        Ok(RunConfig::default())
    }
}

fn fmt_opt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        "nan".into()
    }
}

/// Key=value fit report.
pub fn fit_report(a: &Analysis, opts: &AnalysisOptions) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n_curves={}", a.curves.len());
    let _ = writeln!(s, "gauge_k={}", opts.gauge_k);
    let excluded: Vec<String> = a.collapse.excluded.iter().map(|k| k.to_string()).collect();
    let _ = writeln!(s, "excluded_k={}", excluded.join(" "));
    let _ = writeln!(s, "residual_rms={}", fmt_opt(a.collapse.residual_rms));
    let _ = writeln!(s, "residual_points={}", a.collapse.residual_count);
    for slope in &a.slopes {
        let name = slope.branch.as_str();
        let _ = writeln!(s, "slope_{name}={}", fmt_opt(slope.fit.slope));
        let _ = writeln!(s, "slope_{name}_err={}", fmt_opt(slope.fit.slope_err));
        let _ = writeln!(s, "slope_{name}_u_max={}", fmt_opt(slope.u_max));
    }
    match &a.critical {
        Ok(fit) => write_critical(&mut s, "", fit),
        Err(e) => {
            let _ = writeln!(s, "critical_error={e}");
        }
    }
    if let Some(g) = &a.global {
        match g {
            Ok(g) => {
                let _ = writeln!(s, "global_k_c={}", fmt_opt(g.k_c));
                let _ = writeln!(s, "global_k_c_err={}", fmt_opt(g.k_c_err));
                let _ = writeln!(s, "global_nu={}", fmt_opt(g.nu));
                let _ = writeln!(s, "global_nu_err={}", fmt_opt(g.nu_err));
                let _ = writeln!(s, "global_cutoff_localized={}", fmt_opt(g.cutoff[0]));
                let _ = writeln!(s, "global_cutoff_diffusive={}", fmt_opt(g.cutoff[1]));
                let _ = writeln!(s, "global_residual_rms={}", fmt_opt(g.residual_rms));
            }
            Err(e) => {
                let _ = writeln!(s, "global_error={e}");
            }
        }
    }
    s
}

fn write_critical(s: &mut String, prefix: &str, fit: &CriticalFit) {
    let (p, e) = (&fit.params, &fit.errors);
    for (name, v, err) in [
        ("k_c", p.k_c, e.k_c),
        ("nu", p.nu, e.nu),
        ("beta", p.beta, e.beta),
        ("alpha_loc", p.alpha_loc, e.alpha_loc),
        ("alpha_diff", p.alpha_diff, e.alpha_diff),
    ] {
        let _ = writeln!(s, "{prefix}{name}={}", fmt_opt(v));
        let _ = writeln!(s, "{prefix}{name}_err={}", fmt_opt(err));
    }
    let _ = writeln!(s, "{prefix}chi2={}", fmt_opt(fit.chi2));
    let _ = writeln!(s, "{prefix}dof={}", fit.dof);
}

/// Report for a stand-alone critical fit.
pub fn critical_report(fit: &CriticalFit) -> String {
    let mut s = String::new();
    write_critical(&mut s, "", fit);
    s
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

/// Writes `lambda_all.csv`, `collapse.csv`, `f_samples.csv` and
/// `fit_report.txt`; returns the file names.
pub fn write_analysis(a: &Analysis, opts: &AnalysisOptions, out_dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out_dir)?;
    let mut w = create(out_dir, LAMBDA_ALL_FILE)?;
    writeln!(w, "K,t,lambda,lambda_err")?;
    for c in &a.curves {
        c.write_csv(&mut w, false)?;
    }
    w.flush()?;

    let mut w = create(out_dir, COLLAPSE_FILE)?;
    writeln!(w, "K,xi,branch")?;
    for c in &a.collapse.xi {
        writeln!(w, "{},{:e},{}", c.kick, c.xi, c.regime.as_str())?;
    }
    w.flush()?;

    let mut w = create(out_dir, F_SAMPLES_FILE)?;
    writeln!(w, "u,lambda,branch,K,t")?;
    for p in &a.collapse.f_samples {
        writeln!(
            w,
            "{:e},{:e},{},{},{}",
            p.u,
            p.lambda,
            p.branch.as_str(),
            p.kick,
            p.t
        )?;
    }
    w.flush()?;

    fs::write(out_dir.join(FIT_REPORT_FILE), fit_report(a, opts))?;
    Ok([
        LAMBDA_ALL_FILE,
        COLLAPSE_FILE,
        F_SAMPLES_FILE,
        FIT_REPORT_FILE,
    ]
    .map(String::from)
    .to_vec())
}
