//! Independent reference implementations used as test oracles.

#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64;
use qkr_core::{kick_strength_at, Propagator, Realization, SimParams};

/// Dense one-period Floquet matrix `F · Kick(K)` in natural momentum order
/// `m = -N/2 .. N/2-1`, built from explicit sums over the position grid.
pub fn dense_floquet(n: usize, kick: f64, q: f64, hbar: f64) -> Vec<Vec<Complex64>> {
    let half = (n / 2) as i64;
    let x: Vec<f64> = (0..n)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64)
        .collect();
    let phase: Vec<Complex64> = x
        .iter()
        .map(|&xj| Complex64::from_polar(1.0, -kick * xj.cos() / hbar))
        .collect();
    let mut u = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for a in 0..n {
        let m = a as i64 - half;
        let p = hbar * (m as f64 + q);
        let free = Complex64::from_polar(1.0, -p * p / (2.0 * hbar));
        for b in 0..n {
            let mp = b as i64 - half;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += Complex64::from_polar(1.0, -((m - mp) as f64) * x[j]) * phase[j];
            }
            u[a][b] = free * s / n as f64;
        }
    }
    u
}

pub fn mat_vec(u: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    u.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Largest amplitude difference between the dense oracle and the spectral
/// propagator after `kicks` periods on a fixed `n`-site lattice.
pub fn oracle_difference(n: usize, kicks: u32, params: SimParams, real: &Realization) -> f64 {
    let params = params.with_sites(n).with_kicks(kicks).adaptive(false);
    let prop = Propagator::new(&params).unwrap();
    let mut state = prop.initial_state(real);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[n / 2] = Complex64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for t in 0..kicks {
        let k = kick_strength_at(&params, real, t);
        v = mat_vec(&dense_floquet(n, k, real.q, params.hbar), &v);
        prop.step(&mut state, k);
        let spectral = state.natural_order();
        for (a, b) in spectral.iter().zip(&v) {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}
