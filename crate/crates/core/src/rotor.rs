//! Stroboscopic evolution of one quantum realization.
//!
//! The state is stored as momentum amplitudes `c_m`, `m ∈ [-N/2, N/2)`, in
//! FFT order (index `m mod N`). One Floquet period applies the kick
//! `exp(-i K_n cos(x) / ħ)` on the position grid `x_j = 2πj/N` and then the
//! free phase `exp(-i p_m² / (2ħ))` with `p_m = ħ (m + q)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::params::{Realization, SimParams};

/// Largest edge-band population a state may carry before the truncated
/// lattice is considered invalid.
pub const EDGE_TOLERANCE: f64 = 1e-6;

/// Wing population (|m| >= N/4) above which an adaptive lattice doubles.
pub const GROW_THRESHOLD: f64 = 1e-10;

/// Kick strength at kick index `n`:
/// `K [1 + ε cos(ω₂ n + φ₂) cos(ω₃ n + φ₃)]`.
pub fn kick_strength_at(params: &SimParams, real: &Realization, n: u32) -> f64 {
    if params.epsilon == 0.0 {
        return params.kick;
    }
    let t = n as f64;
    let modulation = (params.omega2 * t + real.phi2).cos() * (params.omega3 * t + real.phi3).cos();
    params.kick * (1.0 + params.epsilon * modulation)
}

/// sin and cos of `a` via Cody–Waite reduction to [-π/4, π/4] and the
/// fdlibm minimax kernels. Accurate to a couple of ulps for |a| < 1e5,
/// which covers every kick phase; larger arguments fall back to libm.
#[inline]
#[allow(clippy::excessive_precision)]
fn sin_cos_fast(a: f64) -> (f64, f64) {
    const TWO_OVER_PI: f64 = std::f64::consts::FRAC_2_PI;
    // π/2 split so that k * PIO2_1 is exact for |k| < 2^20.
    const PIO2_1: f64 = 1.57079632673412561417e+00;
    const PIO2_2: f64 = 6.07710050630396597660e-11;
    const PIO2_3: f64 = 2.02226624879595063154e-21;
    const S: [f64; 6] = [
        -1.66666666666666324348e-01,
        8.33333333332248946124e-03,
        -1.98412698298579493134e-04,
        2.75573137070700676789e-06,
        -2.50507602534068634195e-08,
        1.58969099521155010221e-10,
    ];
    const C: [f64; 6] = [
        4.16666666666666019037e-02,
        -1.38888888888741095749e-03,
        2.48015872894767294178e-05,
        -2.75573143513906633035e-07,
        2.08757232129817482790e-09,
        -1.13596475577881948265e-11,
    ];
    if !(a.abs() < 1e5) {
        return a.sin_cos();
    }
    let k = (a * TWO_OVER_PI).round();
    let r = ((a - k * PIO2_1) - k * PIO2_2) - k * PIO2_3;
    let z = r * r;
    let sp = S[0] + z * (S[1] + z * (S[2] + z * (S[3] + z * (S[4] + z * S[5]))));
    let s = r + r * z * sp;
    let cp = C[0] + z * (C[1] + z * (C[2] + z * (C[3] + z * (C[4] + z * C[5]))));
    let hz = 0.5 * z;
    let w = 1.0 - hz;
    let c = w + (((1.0 - w) - hz) + z * z * cp);
    let quadrant = (k as i64) & 3;
    let (s, c) = if quadrant & 1 == 1 { (c, s) } else { (s, c) };
    let sin_sign = if quadrant & 2 == 2 { -1.0 } else { 1.0 };
    let cos_sign = if (quadrant + 1) & 2 == 2 { -1.0 } else { 1.0 };
    (sin_sign * s, cos_sign * c)
}

/// Number of sites on each side that form the edge band (outer 10% in total).
fn edge_band(sites: usize) -> usize {
    (sites / 20).max(1)
}

struct Level {
    sites: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// cos(x_j) for j = 0..=N/2; the rest follows from cos(x_j) = cos(x_{N-j}).
    cos_x: Vec<f64>,
    scratch_len: usize,
}

impl Level {
    fn new(planner: &mut FftPlanner<f64>, sites: usize) -> Self {
        let forward = planner.plan_fft_forward(sites);
        let inverse = planner.plan_fft_inverse(sites);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let cos_x = (0..=sites / 2)
            .map(|j| (2.0 * PI * j as f64 / sites as f64).cos())
            .collect();
        Self {
            sites,
            forward,
            inverse,
            cos_x,
            scratch_len,
        }
    }
}

/// A momentum-space wavefunction for one realization.
#[derive(Debug, Clone)]
pub struct QuantumState {
    amps: Vec<Complex64>,
    /// exp(-i ħ (m+q)² / 2) / N in FFT order.
    free: Vec<Complex64>,
    scratch: Vec<Complex64>,
    level: usize,
    q: f64,
    hbar: f64,
    t: u32,
}

impl QuantumState {
    /// Plane wave `c_m = δ_{m,0}` on `sites` sites.
    pub fn plane_wave(sites: usize, q: f64, hbar: f64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); sites];
        amps[0] = Complex64::new(1.0, 0.0);
        Self::from_fft_order(amps, q, hbar)
    }

    /// Builds a state from amplitudes listed for `m = -N/2 .. N/2-1`.
    pub fn from_natural_order(natural: &[Complex64], q: f64, hbar: f64) -> Self {
        let n = natural.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        for (i, &c) in natural.iter().enumerate() {
            amps[(i + n / 2) % n] = c;
        }
        Self::from_fft_order(amps, q, hbar)
    }

    fn from_fft_order(amps: Vec<Complex64>, q: f64, hbar: f64) -> Self {
        let mut state = Self {
            free: Vec::new(),
            scratch: Vec::new(),
            amps,
            level: 0,
            q,
            hbar,
            t: 0,
        };
        state.refresh_free_phases();
        state
    }

    fn refresh_free_phases(&mut self) {
        let n = self.amps.len();
        let scale = 1.0 / n as f64;
        self.free = (0..n)
            .map(|k| {
                let p = self.hbar * (self.momentum_index(k) as f64 + self.q);
                Complex64::from_polar(scale, -p * p / (2.0 * self.hbar))
            })
            .collect();
    }

    fn momentum_index(&self, k: usize) -> i64 {
        let n = self.amps.len();
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    pub fn sites(&self) -> usize {
        self.amps.len()
    }

    pub fn kicks(&self) -> u32 {
        self.t
    }

    pub fn quasimomentum(&self) -> f64 {
        self.q
    }

    /// Amplitude of ladder site `m`, zero outside the lattice.
    pub fn amplitude(&self, m: i64) -> Complex64 {
        let n = self.amps.len() as i64;
        if m < -n / 2 || m >= n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        self.amps[m.rem_euclid(n) as usize]
    }

    /// Amplitudes for `m = -N/2 .. N/2-1`.
    pub fn natural_order(&self) -> Vec<Complex64> {
        let n = self.amps.len();
        (0..n).map(|i| self.amps[(i + n / 2) % n]).collect()
    }

    /// Probabilities |c_m|² for `m = -N/2 .. N/2-1`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.natural_order().iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Population of the m = 0 site.
    pub fn pi0(&self) -> f64 {
        self.amps[0].norm_sqr()
    }

    /// ⟨p²⟩ with `p_m = ħ (m + q)`.
    pub fn p2(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let p = self.hbar * (self.momentum_index(k) as f64 + self.q);
                c.norm_sqr() * p * p
            })
            .sum()
    }

    /// Population in the outer 10% of the lattice.
    pub fn edge_population(&self) -> f64 {
        let n = self.amps.len();
        let band = edge_band(n);
        self.amps[n / 2 - band..n / 2 + band]
            .iter()
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Population with |m| >= N/4.
    fn wing_population(&self) -> f64 {
        let n = self.amps.len();
        self.amps[n / 4..n - n / 4]
            .iter()
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Doubles the lattice by zero-padding the momentum wings.
    fn grow(&mut self) {
        let n = self.amps.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * n];
        amps[..n / 2].copy_from_slice(&self.amps[..n / 2]);
        amps[n + n / 2..].copy_from_slice(&self.amps[n / 2..]);
        self.amps = amps;
        self.level += 1;
        self.refresh_free_phases();
    }
}

/// FFT plans and kick tables shared by every realization of one parameter
/// set. Cheap to share across threads.
pub struct Propagator {
    params: SimParams,
    levels: Vec<Level>,
}

impl Propagator {
    pub fn new(params: &SimParams) -> Result<Self> {
        params.validate()?;
        let mut planner = FftPlanner::new();
        let mut levels = Vec::new();
        let mut sites = params.initial_sites();
        while sites <= params.n_sites {
            levels.push(Level::new(&mut planner, sites));
            sites *= 2;
        }
        Ok(Self {
            params: params.clone(),
            levels,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// Initial plane wave at m = 0 for the given realization.
    pub fn initial_state(&self, real: &Realization) -> QuantumState {
        QuantumState::plane_wave(self.levels[0].sites, real.q, self.params.hbar)
    }

    fn level_for(&self, state: &QuantumState) -> &Level {
        let level = &self.levels[state.level];
        assert_eq!(
            level.sites,
            state.sites(),
            "state lattice does not match the propagator"
        );
        level
    }

    /// One Floquet period (kick, then free flight) without any lattice
    /// bookkeeping.
    pub fn step(&self, state: &mut QuantumState, kick: f64) {
        let level = self.level_for(state);
        let n = level.sites;
        if state.scratch.len() < level.scratch_len {
            state
                .scratch
                .resize(level.scratch_len, Complex64::new(0.0, 0.0));
        }
        level
            .inverse
            .process_with_scratch(&mut state.amps, &mut state.scratch);
        let theta = kick / self.params.hbar;
        for (j, &c) in level.cos_x.iter().enumerate() {
            let (s, co) = sin_cos_fast(theta * c);
            let factor = Complex64::new(co, -s);
            state.amps[j] *= factor;
            if j != 0 && j != n / 2 {
                state.amps[n - j] *= factor;
            }
        }
        level
            .forward
            .process_with_scratch(&mut state.amps, &mut state.scratch);
        for (a, f) in state.amps.iter_mut().zip(&state.free) {
            *a *= f;
        }
        state.t += 1;
    }

    /// One Floquet period followed by the truncation check. Adaptive
    /// lattices grow first; a fixed (or maxed-out) lattice whose edge band
    /// exceeds [`EDGE_TOLERANCE`] yields `TruncationOverflow`.
    pub fn apply_floquet(&self, state: &mut QuantumState, kick: f64) -> Result<()> {
        self.step(state, kick);
        if self.params.adaptive {
            while state.level + 1 < self.levels.len() && state.wing_population() > GROW_THRESHOLD {
                state.grow();
            }
        }
        let population = state.edge_population();
        if population > EDGE_TOLERANCE {
            return Err(Error::TruncationOverflow {
                kick: state.t - 1,
                population,
                sites: state.sites(),
            });
        }
        Ok(())
    }

    /// Evolves the plane wave through `n_kicks` periods, recording Π₀ and
    /// ⟨p²⟩ at each requested kick count, and returns the final
    /// distribution.
    pub fn evolve(&self, real: &Realization, record_times: &[u32]) -> Result<RealizationSeries> {
        let n_kicks = self.params.n_kicks;
        let sorted = record_times.windows(2).all(|w| w[0] < w[1]);
        if !sorted || record_times.last().is_some_and(|&t| t > n_kicks) {
            return Err(Error::InvalidRecordTimes { n_kicks });
        }
        let mut state = self.initial_state(real);
        let mut records = Vec::with_capacity(record_times.len());
        let mut pending = record_times.iter().peekable();
        for n in 0..=n_kicks {
            if pending.next_if_eq(&&n).is_some() {
                records.push(Record {
                    t: n,
                    pi0: state.pi0(),
                    p2: state.p2(),
                });
            }
            if n == n_kicks {
                break;
            }
            self.apply_floquet(&mut state, kick_strength_at(&self.params, real, n))?;
        }
        Ok(RealizationSeries {
            records,
            snapshot: Snapshot::of(&state),
        })
    }
}

/// Convenience wrapper that builds a one-off [`Propagator`].
pub fn evolve(
    params: &SimParams,
    real: &Realization,
    record_times: &[u32],
) -> Result<RealizationSeries> {
    Propagator::new(params)?.evolve(real, record_times)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: u32,
    /// |c₀|².
    pub pi0: f64,
    pub p2: f64,
}

/// Final momentum distribution of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: u32,
    pub q: f64,
    pub hbar: f64,
    /// |c_m|² for m = -N/2 .. N/2-1.
    pub probs: Vec<f64>,
}

impl Snapshot {
    pub fn of(state: &QuantumState) -> Self {
        Self {
            t: state.t,
            q: state.q,
            hbar: state.hbar,
            probs: state.probabilities(),
        }
    }

    pub fn first_site(&self) -> i64 {
        -(self.probs.len() as i64 / 2)
    }

    /// (p_m, |c_m|²) pairs.
    pub fn momenta(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let m0 = self.first_site();
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.hbar * ((m0 + i as i64) as f64 + self.q), w))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationSeries {
    pub records: Vec<Record>,
    pub snapshot: Snapshot,
}
