//! `qkr`: simulations and scaling analysis of the quasiperiodic kicked rotor.
//!
//! Exit codes: 0 on success, 1 if any point failed (or an analysis step
//! failed), 2 on configuration errors.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use qkr_core::observables::{fit_shape, pi0_inverse_squared, write_distributions_csv};
use qkr_core::runner::analysis::{self, critical_report, dataset_config};
use qkr_core::runner::io::read_xi_csv;
use qkr_core::runner::sweep::growth_and_regime;
use qkr_core::runner::{
    analyse_dataset, run_classical_check, run_ensemble, run_phase_diagram, run_sweep, with_workers,
    workers_from_env, write_analysis, write_classical_check, write_phase_diagram, AnalysisOptions,
    Preset, RunConfig,
};
use qkr_core::scaling::{fit_critical, lambda_series, CriticalFitOptions};
use qkr_core::Error;

#[derive(Parser)]
#[command(name = "qkr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble evolution at a single (K, ε) point.
    Evolve(EvolveArgs),
    /// Sweep along the line (4, 0.1) -> (9, 0.8) in the (K, ε) plane.
    Sweep(RunArgs),
    /// Classify regimes on a (K, ε) grid.
    PhaseDiagram(RunArgs),
    /// Classical diffusion exponent at every sweep point.
    ClassicalCheck(RunArgs),
    /// Scaling analysis of an existing sweep directory.
    Scale(ScaleArgs),
    /// Fit 1/ξ = α|K - K_c|^ν + β to a `K,xi` CSV.
    Fit(FitArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter preset: experiment, desk or numerics.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    kicks: Option<u32>,
    #[arg(long)]
    points: Option<usize>,
    /// Maximum lattice size (power of two).
    #[arg(long)]
    sites: Option<usize>,
    /// Worker threads; overrides QKR_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(p)) => RunConfig::preset(p.parse::<Preset>()?),
            (None, None) => RunConfig::default(),
        };
        if self.config.is_some() && self.preset.is_some() {
            return Err(Error::Config(
                "--config and --preset are mutually exclusive".into(),
            ));
        }
        if let Some(s) = self.seed {
            cfg.sweep.master_seed = s;
        }
        if let Some(r) = self.realizations {
            cfg.sweep.n_realizations = r;
            cfg.phase_diagram.n_realizations = r;
        }
        if let Some(k) = self.kicks {
            cfg.sweep.n_kicks = k;
            cfg.phase_diagram.n_kicks = k;
            cfg.classical.n_kicks = k;
        }
        if let Some(p) = self.points {
            cfg.sweep.n_points = p;
        }
        if let Some(n) = self.sites {
            cfg.physics.n_sites = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn workers(&self) -> Option<usize> {
        self.workers.or_else(workers_from_env)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long = "kick", short = 'k')]
    kick: f64,
    #[arg(long, short)]
    epsilon: f64,
    /// Output directory (time series, momentum distribution, Λ curve).
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ScaleArgs {
    /// Sweep directory to analyse.
    dataset: PathBuf,
    /// Where to write the results (defaults to the dataset directory).
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    gauge_k: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Log-t bins per decade applied to Λ (0 disables).
    #[arg(long)]
    bins_per_decade: Option<u32>,
    /// Minimum width of those bins in kicks.
    #[arg(long)]
    min_bin_kicks: Option<u32>,
    #[arg(long)]
    window_start: Option<u32>,
    #[arg(long)]
    window_end: Option<u32>,
    /// One α for both sides of K_c.
    #[arg(long)]
    shared_alpha: bool,
    /// Also run the global one-shot fit.
    #[arg(long)]
    global: bool,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns K and xi (e.g. collapse.csv).
    input: PathBuf,
    #[arg(long)]
    shared_alpha: bool,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum Outcome {
    Ok,
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<Error>(),
                    Some(Error::Config(_) | Error::InvalidParams(_) | Error::OutOfRange(_))
                )
            });
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Evolve(a) => evolve(a),
        Command::Sweep(a) => sweep(a),
        Command::PhaseDiagram(a) => phase_diagram(a),
        Command::ClassicalCheck(a) => classical_check(a),
        Command::Scale(a) => scale(a),
        Command::Fit(a) => fit(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn evolve(a: EvolveArgs) -> Result<Outcome> {
    let cfg = a.config.load()?;
    let params = cfg.physics.params(a.kick, a.epsilon, cfg.sweep.n_kicks);
    params.validate()?;
    let times = cfg.record_times();
    let ens = with_workers(a.config.workers(), || {
        run_ensemble(
            &params,
            cfg.sweep.n_realizations,
            cfg.sweep.master_seed,
            0,
            &times,
            cfg.physics.phase_mode,
        )
    })?;
    fs::create_dir_all(&a.out)?;
    let mut w = create(&a.out.join("timeseries.csv"))?;
    ens.series.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&a.out.join("momentum.csv"))?;
    write_distributions_csv(&ens.distribution, &ens.typical, &mut w)?;
    w.flush()?;
    let inv = pi0_inverse_squared(&ens.series)?;
    if let Ok(curve) = lambda_series(a.kick, &inv, cfg.analysis.window_start, None) {
        let mut w = create(&a.out.join("lambda.csv"))?;
        curve.write_csv(&mut w, true)?;
        w.flush()?;
    }
    match growth_and_regime(&ens.series, cfg.analysis.delta) {
        Ok((g, r)) => println!(
            "K={} epsilon={} gamma={:.4}±{:.4} regime={} max_sites={}",
            a.kick, a.epsilon, g.gamma, g.err, r, ens.max_sites
        ),
        Err(e) => println!("K={} epsilon={} gamma unavailable: {e}", a.kick, a.epsilon),
    }
    if let Ok(shape) = fit_shape(&ens.typical) {
        println!(
            "shape={} r2_exponential={:.4} r2_gaussian={:.4}",
            shape.kind.as_str(),
            shape.r2_exponential,
            shape.r2_gaussian
        );
    }
    Ok(Outcome::Ok)
}

fn sweep(a: RunArgs) -> Result<Outcome> {
    let cfg = a.config.load()?;
    let out = with_workers(a.config.workers(), || run_sweep(&cfg, &a.out))?;
    for p in &out.points {
        match &p.result {
            Ok(d) => println!(
                "point {:>3} K={:.4} epsilon={:.4} gamma={} regime={}",
                p.index,
                p.kick,
                p.epsilon,
                d.growth.map_or("-".into(), |g| format!("{:.4}", g.gamma)),
                d.regime.map_or("-", |r| r.as_str())
            ),
            Err(e) => println!(
                "point {:>3} K={:.4} epsilon={:.4} FAILED: {e}",
                p.index, p.kick, p.epsilon
            ),
        }
    }
    Ok(if out.failures() > 0 {
        Outcome::Partial
    } else {
        Outcome::Ok
    })
}

fn phase_diagram(a: RunArgs) -> Result<Outcome> {
    let cfg = a.config.load()?;
    let pd = with_workers(a.config.workers(), || run_phase_diagram(&cfg))?;
    write_phase_diagram(&pd, &a.out)?;
    print!("{}", pd.monotonicity_report());
    Ok(if pd.failures() > 0 {
        Outcome::Partial
    } else {
        Outcome::Ok
    })
}

fn classical_check(a: RunArgs) -> Result<Outcome> {
    let cfg = a.config.load()?;
    let points = with_workers(a.config.workers(), || run_classical_check(&cfg))?;
    fs::create_dir_all(&a.out)?;
    let mut w = create(&a.out.join(qkr_core::runner::control::CLASSICAL_FILE))?;
    write_classical_check(&points, &mut w)?;
    w.flush()?;
    let mut failed = false;
    for p in &points {
        match &p.result {
            Ok(d) => println!(
                "point {:>3} K={:.4} gamma_cl={:.4} D={:.4}{}",
                p.index,
                p.kick,
                d.gamma,
                d.diffusion,
                if p.flagged() { " FLAGGED" } else { "" }
            ),
            Err(e) => {
                failed = true;
                println!("point {:>3} K={:.4} FAILED: {e}", p.index, p.kick);
            }
        }
    }
    Ok(if failed {
        Outcome::Partial
    } else {
        Outcome::Ok
    })
}

fn scale(a: ScaleArgs) -> Result<Outcome> {
    let cfg = dataset_config(&a.dataset)?;
    let mut opts = AnalysisOptions::from_config(&cfg);
    if let Some(k) = a.gauge_k {
        opts.gauge_k = k;
    }
    if let Some(d) = a.delta {
        opts.delta = d;
    }
    if let Some(b) = a.bins_per_decade {
        opts.bins_per_decade = (b > 0).then_some(b);
    }
    if let Some(m) = a.min_bin_kicks {
        opts.min_bin_kicks = m;
    }
    if let Some(w) = a.window_start {
        opts.window_start = w;
    }
    if a.window_end.is_some() {
        opts.window_end = a.window_end;
    }
    opts.critical.shared_alpha |= a.shared_alpha;
    opts.global |= a.global;
    let result = analyse_dataset(&a.dataset, &opts)?;
    let out = a.out.unwrap_or(a.dataset);
    write_analysis(&result, &opts, &out)?;
    print!("{}", analysis::fit_report(&result, &opts));
    let failed = result.critical.is_err() || matches!(result.global, Some(Err(_)));
    Ok(if failed {
        Outcome::Partial
    } else {
        Outcome::Ok
    })
}

fn fit(a: FitArgs) -> Result<Outcome> {
    let xi = read_xi_csv(&a.input)?;
    let opts = CriticalFitOptions {
        shared_alpha: a.shared_alpha,
        ..Default::default()
    };
    let report = critical_report(&fit_critical(&xi, &opts)?);
    match a.out {
        Some(path) => {
            fs::write(&path, report).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => print!("{report}"),
    }
    Ok(Outcome::Ok)
}
