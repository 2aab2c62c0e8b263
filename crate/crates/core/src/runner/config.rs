//! Run configuration.
//!
//! Configuration files are TOML with four optional sections; every key has a
//! default matching the cold-atom experiment:
//!
//! ```toml
//! [physics]
//! hbar = 2.89            # effective Planck constant
//! omega2 = 14.0496...    # default 2π√5
//! omega3 = 22.6543...    # default 2π√13
//! n_sites = 8192         # (maximum) lattice size, power of two
//! adaptive = true        # grow the lattice from 64 sites as needed
//! phase_mode = "random"  # or "fixed" (φ₂ = φ₃ = 0)
//!
//! [sweep]
//! k_start = 4.0
//! eps_start = 0.1
//! k_end = 9.0
//! eps_end = 0.8
//! n_points = 16
//! n_realizations = 1000
//! master_seed = 20080801
//! n_kicks = 3000
//! dense_until = 3000           # record every kick up to here
//! log_points_per_decade = 30   # then log-spaced records
//!
//! [[sweep.overrides]]          # optional per-point physics overrides
//! point = 15
//! n_sites = 16384
//!
//! [analysis]
//! window_start = 30
//! delta = 0.15
//! window_end = 3000           # optional
//! gauge_k = 4.0                # defaults to k_start
//! bins_per_decade = 20         # log-t binning of Λ; 0 disables
//! min_bin_kicks = 10           # minimum bin width in kicks
//! shared_alpha = false         # one α for both branches in the critical fit
//! global_fit = false           # also run the one-shot global fit
//!
//! [classical]
//! n_trajectories = 10000
//! n_kicks = 1000
//!
//! [phase_diagram]
//! k_min = 4.0
//! k_max = 9.0
//! k_step = 1.0
//! eps_min = 0.1
//! eps_max = 0.7
//! eps_step = 0.2
//! n_kicks = 1000
//! n_realizations = 200
//! delta = 0.15
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{default_omega2, default_omega3, PhaseMode, SimParams, DEFAULT_HBAR};
use crate::scaling::{DEFAULT_DELTA, DEFAULT_WINDOW_START};

/// The sweep line runs from (K, ε) = (4, 0.1) to (9, 0.8).
pub const LINE_START: (f64, f64) = (4.0, 0.1);
pub const LINE_END: (f64, f64) = (9.0, 0.8);

/// Modulation amplitude on the default sweep line.
pub fn epsilon_of_k(kick: f64) -> Result<f64> {
    let (k0, e0) = LINE_START;
    let (k1, e1) = LINE_END;
    if !(k0..=k1).contains(&kick) {
        return Err(Error::OutOfRange(format!(
            "K = {kick} is outside the sweep line [{k0}, {k1}]"
        )));
    }
    Ok(e0 + (e1 - e0) * (kick - k0) / (k1 - k0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub hbar: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub n_sites: usize,
    pub adaptive: bool,
    pub phase_mode: PhaseMode,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            hbar: DEFAULT_HBAR,
            omega2: default_omega2(),
            omega3: default_omega3(),
            n_sites: 8192,
            adaptive: true,
            phase_mode: PhaseMode::Random,
        }
    }
}

impl PhysicsConfig {
    pub fn params(&self, kick: f64, epsilon: f64, n_kicks: u32) -> SimParams {
        SimParams {
            kick,
            epsilon,
            omega2: self.omega2,
            omega3: self.omega3,
            hbar: self.hbar,
            n_sites: self.n_sites,
            n_kicks,
            adaptive: self.adaptive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointOverride {
    pub point: usize,
    pub kick: Option<f64>,
    pub epsilon: Option<f64>,
    pub n_sites: Option<usize>,
    pub adaptive: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k_start: f64,
    pub eps_start: f64,
    pub k_end: f64,
    pub eps_end: f64,
    pub n_points: usize,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub n_kicks: u32,
    pub dense_until: u32,
    pub log_points_per_decade: u32,
    pub overrides: Vec<PointOverride>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_start: LINE_START.0,
            eps_start: LINE_START.1,
            k_end: LINE_END.0,
            eps_end: LINE_END.1,
            n_points: 16,
            n_realizations: 1000,
            master_seed: 20080801,
            n_kicks: 3000,
            dense_until: 3000,
            log_points_per_decade: 30,
            overrides: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub window_start: u32,
    pub window_end: Option<u32>,
    pub delta: f64,
    pub gauge_k: Option<f64>,
    /// Log-t bins per decade applied to Λ before the collapse; 0 disables.
    pub bins_per_decade: u32,
    /// Minimum width of those bins in kicks.
    pub min_bin_kicks: u32,
    pub shared_alpha: bool,
    pub global_fit: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_start: DEFAULT_WINDOW_START,
            window_end: None,
            delta: DEFAULT_DELTA,
            gauge_k: None,
            bins_per_decade: 20,
            min_bin_kicks: 10,
            shared_alpha: false,
            global_fit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalConfig {
    pub n_trajectories: usize,
    pub n_kicks: u32,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 10_000,
            n_kicks: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub k_step: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_step: f64,
    pub n_kicks: u32,
    pub n_realizations: usize,
    pub delta: f64,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        Self {
            k_min: 4.0,
            k_max: 9.0,
            k_step: 1.0,
            eps_min: 0.1,
            eps_max: 0.7,
            eps_step: 0.2,
            n_kicks: 1000,
            n_realizations: 200,
            delta: DEFAULT_DELTA,
        }
    }
}

/// Everything a run needs. Serialised verbatim into each output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    pub sweep: SweepConfig,
    pub analysis: AnalysisConfig,
    pub classical: ClassicalConfig,
    pub phase_diagram: PhaseDiagramConfig,
}

/// Named parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Up to 150 kicks, the experimentally accessible range.
    Experiment,
    /// Up to 3000 kicks: the default, affordable on a single workstation.
    Desk,
    /// Up to 10⁴ kicks on a larger lattice.
    Numerics,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "experiment" => Ok(Preset::Experiment),
            "desk" => Ok(Preset::Desk),
            "numerics" => Ok(Preset::Numerics),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut cfg = Self::default();
        match preset {
            Preset::Experiment => {
                cfg.sweep.n_kicks = 150;
                cfg.physics.n_sites = 4096;
            }
            Preset::Desk => {}
            Preset::Numerics => {
                cfg.sweep.n_kicks = 10_000;
                cfg.physics.n_sites = 32768;
            }
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let s = &self.sweep;
        if s.n_points < 2 {
            return bad(format!("sweep.n_points must be >= 2, got {}", s.n_points));
        }
        if s.n_realizations < 1 {
            return bad("sweep.n_realizations must be >= 1".into());
        }
        if !(s.k_start > 2.0) || !(s.k_end > 2.0) {
            return bad(format!(
                "sweep endpoints need K > 2 for chaotic classical dynamics, got {} and {}",
                s.k_start, s.k_end
            ));
        }
        if s.log_points_per_decade == 0 {
            return bad("sweep.log_points_per_decade must be >= 1".into());
        }
        for o in &s.overrides {
            if o.point >= s.n_points {
                return bad(format!(
                    "override for point {} but only {} points",
                    o.point, s.n_points
                ));
            }
        }
        for p in self.sweep_points() {
            p.params
                .validate()
                .map_err(|e| Error::Config(format!("point {}: {e}", p.index)))?;
            if !(p.params.kick > 2.0) {
                return bad(format!("point {} has K = {} <= 2", p.index, p.params.kick));
            }
        }
        let a = &self.analysis;
        if !(a.delta > 0.0) {
            return bad("analysis.delta must be > 0".into());
        }
        let pd = &self.phase_diagram;
        if !(pd.k_min <= pd.k_max
            && pd.eps_min <= pd.eps_max
            && pd.k_step > 0.0
            && pd.eps_step > 0.0)
        {
            return bad("phase_diagram ranges must be nonempty with positive steps".into());
        }
        if !(pd.k_min > 2.0) {
            return bad(format!("phase_diagram.k_min must be > 2, got {}", pd.k_min));
        }
        if pd.n_realizations < 1 {
            return bad("phase_diagram.n_realizations must be >= 1".into());
        }
        if !(0.0..1.0).contains(&pd.eps_min) || !(0.0..1.0).contains(&pd.eps_max) {
            return bad("phase_diagram epsilon range must lie in [0, 1)".into());
        }
        if self.classical.n_trajectories < 100 {
            return bad("classical.n_trajectories must be >= 100".into());
        }
        Ok(())
    }

    /// Kick strengths and parameters of every sweep point, in order.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let s = &self.sweep;
        (0..s.n_points)
            .map(|i| {
                let frac = i as f64 / (s.n_points - 1) as f64;
                let kick = s.k_start + (s.k_end - s.k_start) * frac;
                let epsilon = s.eps_start + (s.eps_end - s.eps_start) * frac;
                let mut params = self.physics.params(kick, epsilon, s.n_kicks);
                for o in s.overrides.iter().filter(|o| o.point == i) {
                    if let Some(k) = o.kick {
                        params.kick = k;
                    }
                    if let Some(e) = o.epsilon {
                        params.epsilon = e;
                    }
                    if let Some(n) = o.n_sites {
                        params.n_sites = n;
                    }
                    if let Some(a) = o.adaptive {
                        params.adaptive = a;
                    }
                }
                SweepPoint { index: i, params }
            })
            .collect()
    }

    /// Every kick up to `dense_until`, then log-spaced up to `n_kicks`.
    pub fn record_times(&self) -> Vec<u32> {
        record_times(
            self.sweep.n_kicks,
            self.sweep.dense_until,
            self.sweep.log_points_per_decade,
        )
    }

    pub fn gauge_k(&self) -> f64 {
        self.analysis.gauge_k.unwrap_or(self.sweep.k_start)
    }
}

pub fn record_times(n_kicks: u32, dense_until: u32, per_decade: u32) -> Vec<u32> {
    let dense = dense_until.min(n_kicks);
    let mut times: Vec<u32> = (0..=dense).collect();
    if n_kicks > dense {
        let start = (dense.max(1)) as f64;
        let decades = (n_kicks as f64 / start).log10();
        let steps = (decades * per_decade as f64).ceil().max(1.0) as u32;
        for i in 1..=steps {
            let t = (start * 10f64.powf(decades * i as f64 / steps as f64)).round() as u32;
            if t > *times.last().unwrap() {
                times.push(t.min(n_kicks));
            }
        }
        if *times.last().unwrap() != n_kicks {
            times.push(n_kicks);
        }
    }
    times
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub params: SimParams,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_parametrisation() {
        assert!((epsilon_of_k(4.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((epsilon_of_k(9.0).unwrap() - 0.8).abs() < 1e-15);
        assert!((epsilon_of_k(6.6).unwrap() - 0.464).abs() < 1e-15);
        assert!(matches!(epsilon_of_k(3.9), Err(Error::OutOfRange(_))));
        assert!(matches!(epsilon_of_k(9.1), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let pts = cfg.sweep_points();
        assert_eq!(pts.len(), 16);
        assert_eq!(pts[0].params.kick, 4.0);
        assert!((pts[15].params.kick - 9.0).abs() < 1e-12);
        assert!((pts[15].params.epsilon - 0.8).abs() < 1e-12);
        for p in &pts {
            assert!((p.params.epsilon - epsilon_of_k(p.params.kick).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = RunConfig::from_toml("[sweep]\nn_points = 3\n[physics]\nhbar = 1.5\n").unwrap();
        assert_eq!(cfg.sweep.n_points, 3);
        assert_eq!(cfg.physics.hbar, 1.5);
        assert_eq!(cfg.sweep.n_kicks, 3000);
        assert!(RunConfig::from_toml("[sweep]\nbogus = 1\n").is_err());
    }

    #[test]
    fn rejects_non_chaotic_kicks() {
        let mut cfg = RunConfig::default();
        cfg.sweep.k_start = 1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = RunConfig::default();
        cfg.sweep.n_points = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_apply() {
        let cfg =
            RunConfig::from_toml("[[sweep.overrides]]\npoint = 2\nn_sites = 16384\nkick = 5.5\n")
                .unwrap();
        let pts = cfg.sweep_points();
        assert_eq!(pts[2].params.n_sites, 16384);
        assert_eq!(pts[2].params.kick, 5.5);
        assert_eq!(pts[1].params.n_sites, 8192);
    }

    #[test]
    fn record_time_grid() {
        let t = record_times(3000, 150, 30);
        assert_eq!(&t[..151], &(0..=150).collect::<Vec<_>>()[..]);
        assert_eq!(*t.last().unwrap(), 3000);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(t.len() > 170 && t.len() < 200);
        assert_eq!(record_times(10, 150, 30), (0..=10).collect::<Vec<_>>());
    }
}
