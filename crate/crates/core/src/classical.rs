//! Classical limit of the modulated kicked rotor (a modulated standard map),
//! used to confirm that the classical dynamics is diffusive on the whole
//! sweep line.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::params::{splitmix64, PhaseMode, Realization, SimParams};
use crate::rotor::kick_strength_at;

/// Trajectories per reduction block. Fixed so that the summation order does
/// not depend on the number of worker threads.
const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    /// Position in [0, 2π).
    pub x: f64,
    pub p: f64,
}

/// Kick then drift: `p' = p + K_n sin x`, `x' = x + p' mod 2π`.
pub fn classical_step(s: ClassicalState, kick: f64) -> ClassicalState {
    let p = s.p + kick * s.x.sin();
    let x = (s.x + p).rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π for tiny negative arguments.
    let x = if x >= 2.0 * PI { 0.0 } else { x };
    ClassicalState { x, p }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDiffusion {
    /// Diffusion constant from ⟨p²⟩ = 2 D t over the fit window.
    pub diffusion: f64,
    /// Log-log slope of ⟨p²⟩ against t over the fit window.
    pub gamma: f64,
    pub gamma_err: f64,
    /// Sample times and ⟨p²⟩ at each.
    pub times: Vec<u32>,
    pub p2: Vec<f64>,
}

/// Roughly `count` log-spaced distinct integers in `[lo, hi]`, both ends included.
pub fn log_spaced(lo: u32, hi: u32, count: usize) -> Vec<u32> {
    let lo = lo.max(1);
    if hi <= lo || count < 2 {
        return vec![hi.max(lo)];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u32> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u32)
        .collect();
    out[0] = lo;
    *out.last_mut().unwrap() = hi;
    out.dedup();
    out
}

/// Ensemble ⟨p²⟩(t) for `n_traj` trajectories started at p = 0 with x
/// uniform in [0, 2π). Each trajectory carries its own modulation phases
/// (drawn as for a quantum realization when `mode` is random).
pub fn classical_p2(
    params: &SimParams,
    n_traj: usize,
    times: &[u32],
    seed: u64,
    mode: PhaseMode,
) -> Vec<f64> {
    let n_kicks = times.last().copied().unwrap_or(0);
    let blocks: Vec<Vec<f64>> = (0..n_traj.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut sums = vec![0.0; times.len()];
            for j in b * BLOCK..((b + 1) * BLOCK).min(n_traj) {
                let traj_seed = splitmix64(seed ^ splitmix64(j as u64));
                let real = Realization::from_seed(traj_seed, mode);
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(traj_seed));
                let mut s = ClassicalState {
                    x: 2.0 * PI * rng.gen::<f64>(),
                    p: 0.0,
                };
                let mut next = 0;
                for n in 0..=n_kicks {
                    while next < times.len() && times[next] == n {
                        sums[next] += s.p * s.p;
                        next += 1;
                    }
                    if n == n_kicks {
                        break;
                    }
                    s = classical_step(s, kick_strength_at(params, &real, n));
                }
            }
            sums
        })
        .collect();
    let mut total = vec![0.0; times.len()];
    for block in blocks {
        for (t, v) in total.iter_mut().zip(block) {
            *t += v;
        }
    }
    total.iter().map(|s| s / n_traj as f64).collect()
}

/// Growth exponent and diffusion constant of the classical ensemble, fitted
/// on log-spaced samples from the second half of the run.
pub fn classical_diffusion(
    params: &SimParams,
    n_traj: usize,
    n_kicks: u32,
    seed: u64,
    mode: PhaseMode,
) -> Result<ClassicalDiffusion> {
    params.validate()?;
    if n_traj < 100 {
        return Err(Error::InvalidParams(format!(
            "need at least 100 trajectories, got {n_traj}"
        )));
    }
    if n_kicks < 10 {
        return Err(Error::InvalidParams(format!(
            "need at least 10 kicks, got {n_kicks}"
        )));
    }
    let window = log_spaced(n_kicks / 2, n_kicks, 24);
    let mut times = vec![1];
    times.extend(window.iter().copied().filter(|&t| t > 1));
    let p2 = classical_p2(params, n_traj, &times, seed, mode);
    let first = p2[0];
    let last = *p2.last().unwrap();
    let ratio = last / first;
    if !(ratio >= 10.0) {
        return Err(Error::InsufficientGrowth {
            ratio: if ratio.is_finite() { ratio } else { 0.0 },
        });
    }
    let times = times[1..].to_vec();
    let p2 = p2[1..].to_vec();
    let lx: Vec<f64> = times.iter().map(|&t| (t as f64).ln()).collect();
    let ly: Vec<f64> = p2.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&lx, &ly, None)?;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (&t, &y) in times.iter().zip(&p2) {
        sty += t as f64 * y;
        stt += (t as f64).powi(2);
    }
    Ok(ClassicalDiffusion {
        diffusion: sty / stt / 2.0,
        gamma: fit.slope,
        gamma_err: fit.slope_err,
        times,
        p2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_fixed() {
        for k in [0.0, 1.0, 7.3] {
            assert_eq!(
                classical_step(ClassicalState { x: 0.0, p: 0.0 }, k),
                ClassicalState { x: 0.0, p: 0.0 }
            );
        }
    }

    #[test]
    fn direct_evaluation() {
        let s = classical_step(
            ClassicalState {
                x: PI / 2.0,
                p: 0.0,
            },
            4.0,
        );
        assert!((s.p - 4.0).abs() < 1e-15);
        assert!((s.x - (PI / 2.0 + 4.0).rem_euclid(2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn jacobian_is_unimodular() {
        // Transport a small parallelogram and compare its (unwrapped) area.
        let h = 1e-6;
        for &(x, p, k) in &[(0.3, 1.2, 4.0), (2.0, -7.5, 9.3), (5.9, 0.0, 6.6)] {
            let map = |x: f64, p: f64| {
                let pn = p + k * f64::sin(x);
                (x + pn, pn)
            };
            let o = map(x, p);
            let a = map(x + h, p);
            let b = map(x, p + h);
            let (ax, ap) = (a.0 - o.0, a.1 - o.1);
            let (bx, bp) = (b.0 - o.0, b.1 - o.1);
            let area = (ax * bp - ap * bx) / (h * h);
            assert!((area - 1.0).abs() < 1e-10 * 1e4, "area {area}");
            // Analytic Jacobian [[1 + k cos x, 1], [k cos x, 1]] has det 1 exactly.
            let c = k * x.cos();
            assert!(((1.0 + c) * 1.0 - 1.0 * c - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn no_kick_no_growth() {
        let p = SimParams::new(0.0, 0.0);
        let err = classical_diffusion(&p, 200, 100, 1, PhaseMode::Random).unwrap_err();
        assert!(matches!(err, Error::InsufficientGrowth { .. }));
    }

    #[test]
    fn log_spacing() {
        let t = log_spaced(500, 1000, 24);
        assert_eq!(t[0], 500);
        assert_eq!(*t.last().unwrap(), 1000);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }
}
