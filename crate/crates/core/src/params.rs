//! Physical parameters of the modulated kicked rotor and per-realization
//! disorder (quasimomentum and modulation phases).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Effective Planck constant used by the cold-atom realization.
pub const DEFAULT_HBAR: f64 = 2.89;

/// Default lattice size for runs up to a few hundred kicks.
pub const DEFAULT_SITES: usize = 4096;

/// Smallest lattice an adaptive run starts from.
pub const ADAPTIVE_START_SITES: usize = 64;

/// `2π√5`, the first modulation frequency (radians per kick).
pub fn default_omega2() -> f64 {
    2.0 * PI * 5f64.sqrt()
}

/// `2π√13`, the second modulation frequency (radians per kick).
pub fn default_omega3() -> f64 {
    2.0 * PI * 13f64.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Kick strength K.
    pub kick: f64,
    /// Modulation amplitude ε.
    pub epsilon: f64,
    pub omega2: f64,
    pub omega3: f64,
    /// Effective Planck constant.
    pub hbar: f64,
    /// Number of momentum sites (the maximum when `adaptive` is set).
    pub n_sites: usize,
    pub n_kicks: u32,
    /// Start from a small lattice and double it (zero-padding in momentum
    /// space) whenever the wings become populated, up to `n_sites`.
    #[serde(default)]
    pub adaptive: bool,
}

impl SimParams {
    pub fn new(kick: f64, epsilon: f64) -> Self {
        Self {
            kick,
            epsilon,
            omega2: default_omega2(),
            omega3: default_omega3(),
            hbar: DEFAULT_HBAR,
            n_sites: DEFAULT_SITES,
            n_kicks: 150,
            adaptive: false,
        }
    }

    pub fn with_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    pub fn with_kicks(mut self, n_kicks: u32) -> Self {
        self.n_kicks = n_kicks;
        self
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn adaptive(mut self, adaptive: bool) -> Self {
        self.adaptive = adaptive;
        self
    }

    /// Lattice size the evolution starts from.
    pub fn initial_sites(&self) -> usize {
        if self.adaptive {
            ADAPTIVE_START_SITES.min(self.n_sites)
        } else {
            self.n_sites
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.kick >= 0.0) || !self.kick.is_finite() {
            return bad(format!("K must be finite and >= 0, got {}", self.kick));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return bad(format!("hbar must be > 0, got {}", self.hbar));
        }
        if self.n_sites < 8 || !self.n_sites.is_power_of_two() {
            return bad(format!(
                "lattice size must be a power of two >= 8, got {}",
                self.n_sites
            ));
        }
        if !self.omega2.is_finite() || !self.omega3.is_finite() {
            return bad("modulation frequencies must be finite".into());
        }
        Ok(())
    }
}

/// How the modulation phases of each realization are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// Uniform random φ₂, φ₃ per realization.
    #[default]
    Random,
    /// φ₂ = φ₃ = 0.
    Fixed,
}

/// One disorder realization: conserved quasimomentum plus modulation phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realization {
    /// Quasimomentum in [-1/2, 1/2).
    pub q: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub seed: u64,
}

impl Realization {
    /// q = 0 and zero phases.
    pub fn plain() -> Self {
        Self {
            q: 0.0,
            phi2: 0.0,
            phi3: 0.0,
            seed: 0,
        }
    }

    /// Draws q, φ₂, φ₃ (in that order) from a ChaCha8 stream seeded with
    /// `seed`. With [`PhaseMode::Fixed`] the phase draws are still consumed
    /// so that q does not depend on the mode.
    pub fn from_seed(seed: u64, mode: PhaseMode) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = rng.gen::<f64>() - 0.5;
        let phi2 = 2.0 * PI * rng.gen::<f64>();
        let phi3 = 2.0 * PI * rng.gen::<f64>();
        let (phi2, phi3) = match mode {
            PhaseMode::Random => (phi2, phi3),
            PhaseMode::Fixed => (0.0, 0.0),
        };
        Self {
            q,
            phi2,
            phi3,
            seed,
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-realization seed:
/// `splitmix64(splitmix64(splitmix64(master) ^ point) ^ realization)`.
pub fn derive_seed(master: u64, point: u64, realization: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ realization)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experiment() {
        let p = SimParams::new(4.0, 0.1);
        assert_eq!(p.hbar, 2.89);
        assert!((p.omega2 / (2.0 * PI) - 5f64.sqrt()).abs() < 1e-15);
        assert!((p.omega3 / (2.0 * PI) - 13f64.sqrt()).abs() < 1e-15);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SimParams::new(-1.0, 0.1).validate().is_err());
        assert!(SimParams::new(4.0, 1.0).validate().is_err());
        assert!(SimParams::new(4.0, 0.1).with_sites(100).validate().is_err());
        assert!(SimParams::new(4.0, 0.1).with_sites(4).validate().is_err());
        assert!(SimParams::new(4.0, 0.1).with_hbar(0.0).validate().is_err());
    }

    #[test]
    fn realizations_in_range_and_reproducible() {
        for i in 0..500 {
            let seed = derive_seed(42, 3, i);
            let r = Realization::from_seed(seed, PhaseMode::Random);
            assert!((-0.5..0.5).contains(&r.q));
            assert!((0.0..2.0 * PI).contains(&r.phi2));
            assert!((0.0..2.0 * PI).contains(&r.phi3));
            assert_eq!(r, Realization::from_seed(seed, PhaseMode::Random));
        }
        let fixed = Realization::from_seed(7, PhaseMode::Fixed);
        assert_eq!((fixed.phi2, fixed.phi3), (0.0, 0.0));
        assert_eq!(fixed.q, Realization::from_seed(7, PhaseMode::Random).q);
    }

    #[test]
    fn seeds_differ_across_indices() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(2, 0, 0));
    }
}
