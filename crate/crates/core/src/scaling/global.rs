//! One-shot global fit, an alternative to the collapse + critical-fit chain.
//!
//! Every Λ point is fitted at once to `ln Λ = P_b(ln u)`, `u = ξ(K) t^{-1/3}`,
//! with `1/ξ = α_b (|K - K_c|^ν + b_b)` and a cubic `P_b` per branch. A shift
//! of ln u is absorbed by the polynomial, so α_b drops out and each branch
//! keeps only its relative cutoff `b_b = β/α_b`. Branch membership is decided
//! once, from K against the starting K_c, so the objective stays smooth while
//! K_c moves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions, LsqModel};
use crate::scaling::critical::{CriticalParams, NU_MAX, NU_MIN};
use crate::scaling::lambda::ScalingCurve;

pub const POLY_DEGREE: usize = 3;
const NC: usize = POLY_DEGREE + 1;

#[derive(Debug, Clone)]
pub struct GlobalFit {
    pub k_c: f64,
    pub k_c_err: f64,
    pub nu: f64,
    pub nu_err: f64,
    /// Relative cutoffs β/α of the localized and diffusive branch.
    pub cutoff: [f64; 2],
    pub cutoff_err: [f64; 2],
    /// Coefficients of `ln f` in powers of `ln u`, lowest first.
    pub poly_loc: [f64; NC],
    pub poly_diff: [f64; NC],
    pub residual_rms: f64,
    pub chi2: f64,
    pub dof: usize,
}

struct Data {
    k: Vec<f64>,
    below: Vec<bool>,
    log_t: Vec<f64>,
    v: Vec<f64>,
    inv_sigma: Vec<f64>,
    k_range: (f64, f64),
}

// Parameter layout: [K_c, ν, b_loc, b_diff, c_loc.., c_diff..]
const NP: usize = 4 + 2 * NC;

impl Data {
    fn predict(&self, p: &[f64], i: usize) -> f64 {
        let (kc, nu) = (p[0], p[1]);
        let below = self.below[i];
        let cutoff = if below { p[2] } else { p[3] };
        let ln_u = -((self.k[i] - kc).abs().powf(nu) + cutoff).ln() - self.log_t[i] / 3.0;
        let c = if below { &p[4..4 + NC] } else { &p[4 + NC..] };
        c.iter().rev().fold(0.0, |acc, &ci| acc * ln_u + ci)
    }
}

impl LsqModel for Data {
    fn n_params(&self) -> usize {
        NP
    }

    fn n_residuals(&self) -> usize {
        self.k.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.predict(p, i) - self.v[i]) * self.inv_sigma[i];
        }
    }

    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let mut q = p.to_vec();
        for j in 0..NP {
            let h = 1e-7 * p[j].abs().max(1e-3);
            q[j] = p[j] + h;
            self.project(&mut q);
            let up = q[j];
            let plus: Vec<f64> = (0..self.k.len()).map(|i| self.predict(&q, i)).collect();
            q[j] = p[j] - h;
            self.project(&mut q);
            let down = q[j];
            for (i, pl) in plus.iter().enumerate() {
                out[(i, j)] = (pl - self.predict(&q, i)) / (up - down) * self.inv_sigma[i];
            }
            q[j] = p[j];
        }
    }

    fn project(&self, p: &mut [f64]) {
        p[0] = p[0].clamp(self.k_range.0, self.k_range.1);
        p[1] = p[1].clamp(NU_MIN, NU_MAX);
        p[2] = p[2].max(1e-12);
        p[3] = p[3].max(1e-12);
    }
}

fn poly_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<[f64; NC]> {
    if x.len() < NC {
        return Err(Error::DegenerateBranch(
            "global fit branch has too few points",
        ));
    }
    let a = DMatrix::from_fn(x.len(), NC, |i, j| w[i] * x[i].powi(j as i32));
    let b = DVector::from_iterator(y.len(), y.iter().zip(w).map(|(y, w)| y * w));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InsufficientData(e.to_string()))?;
    let mut c = [0.0; NC];
    c.copy_from_slice(sol.as_slice());
    Ok(c)
}

/// Global fit of all curves, started from `start` (typically the result of
/// the collapse-based critical fit).
pub fn global_fit(
    curves: &[ScalingCurve],
    start: &CriticalParams,
    lm: LmOptions,
) -> Result<GlobalFit> {
    let mut data = Data {
        k: Vec::new(),
        below: Vec::new(),
        log_t: Vec::new(),
        v: Vec::new(),
        inv_sigma: Vec::new(),
        k_range: (f64::INFINITY, f64::NEG_INFINITY),
    };
    for c in curves {
        data.k_range = (data.k_range.0.min(c.kick), data.k_range.1.max(c.kick));
        for p in &c.points {
            if !(p.lambda > 0.0) {
                return Err(Error::InsufficientData(format!(
                    "non-positive Lambda at K = {}",
                    c.kick
                )));
            }
            data.k.push(c.kick);
            data.log_t.push((p.t as f64).ln());
            data.v.push(p.lambda.ln());
            let rel = p.err / p.lambda;
            data.inv_sigma.push(if rel > 0.0 { 1.0 / rel } else { 1.0 });
        }
    }
    // Normalise weights to mean 1 so chi2 is on the scale of the data.
    let mean_w = data.inv_sigma.iter().sum::<f64>() / data.inv_sigma.len().max(1) as f64;
    data.inv_sigma.iter_mut().for_each(|w| *w /= mean_w);

    let cut = |alpha: f64| (start.beta / alpha.max(1e-12)).max(1e-6);
    let mut p0 = vec![
        start.k_c,
        start.nu,
        cut(start.alpha_loc),
        cut(start.alpha_diff),
    ];
    data.project(&mut p0);
    data.below = data.k.iter().map(|&k| k < p0[0]).collect();
    for below in [true, false] {
        let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..data.k.len() {
            if data.below[i] == below {
                let cutoff = if below { p0[2] } else { p0[3] };
                x.push(
                    -((data.k[i] - p0[0]).abs().powf(p0[1]) + cutoff).ln() - data.log_t[i] / 3.0,
                );
                y.push(data.v[i]);
                w.push(data.inv_sigma[i]);
            }
        }
        p0.extend(poly_fit(&x, &y, &w)?);
    }
    let sol = levenberg_marquardt(&data, &p0, lm)?;
    let p = &sol.params;
    let n = data.k.len();
    let rms = ((0..n)
        .map(|i| (data.predict(p, i) - data.v[i]).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let mut poly_loc = [0.0; NC];
    let mut poly_diff = [0.0; NC];
    poly_loc.copy_from_slice(&p[4..4 + NC]);
    poly_diff.copy_from_slice(&p[4 + NC..]);
    Ok(GlobalFit {
        k_c: p[0],
        k_c_err: sol.std_err(0),
        nu: p[1],
        nu_err: sol.std_err(1),
        cutoff: [p[2], p[3]],
        cutoff_err: [sol.std_err(2), sol.std_err(3)],
        poly_loc,
        poly_diff,
        residual_rms: rms,
        chi2: sol.chi2,
        dof: sol.dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::lambda::LambdaPoint;

    #[test]
    fn recovers_synthetic_family() {
        let truth = CriticalParams {
            alpha_loc: 1.0,
            alpha_diff: 0.6,
            beta: 0.05,
            k_c: 6.5,
            nu: 1.5,
        };
        let loc = [0.2, 1.8, -0.1, 0.01];
        let diff = [0.5, -0.9, 0.05, 0.0];
        let eval = |c: &[f64; 4], x: f64| c.iter().rev().fold(0.0, |a, &ci| a * x + ci);
        let curves: Vec<ScalingCurve> = (0..12)
            .map(|i| {
                let kick = 4.2 + 0.4 * i as f64;
                let xi = 1.0 / truth.inverse_xi(kick);
                let points = (30..=3000)
                    .step_by(30)
                    .map(|t| {
                        let x = xi.ln() - (t as f64).ln() / 3.0;
                        let v = if kick < truth.k_c {
                            eval(&loc, x)
                        } else {
                            eval(&diff, x)
                        };
                        LambdaPoint {
                            t,
                            lambda: v.exp(),
                            err: 0.0,
                        }
                    })
                    .collect();
                ScalingCurve { kick, points }
            })
            .collect();
        let start = CriticalParams {
            alpha_loc: 1.0,
            alpha_diff: 0.5,
            beta: 0.07,
            k_c: 6.4,
            nu: 1.3,
        };
        let fit = global_fit(&curves, &start, LmOptions::default()).unwrap();
        assert!((fit.k_c - 6.5).abs() < 1e-4, "{fit:?}");
        assert!((fit.nu - 1.5).abs() < 1e-4, "{fit:?}");
        assert!((fit.cutoff[0] - 0.05).abs() < 1e-4, "{fit:?}");
        assert!((fit.cutoff[1] - 0.05 / 0.6).abs() < 1e-4, "{fit:?}");
        assert!(fit.residual_rms < 1e-6);
    }
}
