//! Fit of the scaling parameter near the transition,
//! `1/ξ(K) = α_side |K - K_c|^ν + β`, with `α_side = α_loc` below `K_c` and
//! `α_diff` above it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions, LmSolution, LsqModel};

pub const NU_MIN: f64 = 0.5;
pub const NU_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, Default)]
pub struct CriticalFitOptions {
    /// Use one α for both sides instead of one per side.
    pub shared_alpha: bool,
    pub lm: LmOptions,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CriticalParams {
    pub alpha_loc: f64,
    pub alpha_diff: f64,
    pub beta: f64,
    pub k_c: f64,
    pub nu: f64,
}

impl CriticalParams {
    pub fn inverse_xi(&self, k: f64) -> f64 {
        let alpha = if k < self.k_c {
            self.alpha_loc
        } else {
            self.alpha_diff
        };
        alpha * (k - self.k_c).abs().powf(self.nu) + self.beta
    }
}

#[derive(Debug, Clone)]
pub struct CriticalFit {
    pub params: CriticalParams,
    /// One-sigma errors (covariance scaled by the reduced chi-square).
    pub errors: CriticalParams,
    /// Covariance in parameter order (α_loc, α_diff, β, K_c, ν), or
    /// (α, β, K_c, ν) with a shared α.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

struct Model<'a> {
    k: &'a [f64],
    y: &'a [f64],
    shared: bool,
    k_range: (f64, f64),
}

impl Model<'_> {
    /// (α_loc, α_diff, β, K_c, ν) from the raw parameter vector.
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64, f64) {
        if self.shared {
            (p[0], p[0], p[1], p[2], p[3])
        } else {
            (p[0], p[1], p[2], p[3], p[4])
        }
    }
}

impl LsqModel for Model<'_> {
    fn n_params(&self) -> usize {
        if self.shared {
            4
        } else {
            5
        }
    }

    fn n_residuals(&self) -> usize {
        self.k.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let (al, ad, beta, kc, nu) = self.unpack(p);
        for (o, (&k, &y)) in out.iter_mut().zip(self.k.iter().zip(self.y)) {
            let alpha = if k < kc { al } else { ad };
            *o = alpha * (k - kc).abs().powf(nu) + beta - y;
        }
    }

    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
        let (al, ad, _, kc, nu) = self.unpack(p);
        let off = usize::from(!self.shared);
        for (i, &k) in self.k.iter().enumerate() {
            let below = k < kc;
            let alpha = if below { al } else { ad };
            let d = (k - kc).abs();
            let pow = d.powf(nu);
            for j in 0..self.n_params() {
                out[(i, j)] = 0.0;
            }
            if self.shared || below {
                out[(i, 0)] = pow;
            } else {
                out[(i, 1)] = pow;
            }
            out[(i, 1 + off)] = 1.0;
            let sign = if below { -1.0 } else { 1.0 };
            out[(i, 2 + off)] = if d > 0.0 {
                -alpha * nu * d.powf(nu - 1.0) * sign
            } else {
                0.0
            };
            out[(i, 3 + off)] = if d > 0.0 { alpha * pow * d.ln() } else { 0.0 };
        }
    }

    fn project(&self, p: &mut [f64]) {
        let off = usize::from(!self.shared);
        for a in &mut p[..=off] {
            *a = a.max(0.0);
        }
        p[1 + off] = p[1 + off].max(0.0);
        p[2 + off] = p[2 + off].clamp(self.k_range.0, self.k_range.1);
        p[3 + off] = p[3 + off].clamp(NU_MIN, NU_MAX);
    }
}

fn gauss_newton_polish(model: &Model, params: &mut [f64]) {
    let (np, nr) = (model.n_params(), model.n_residuals());
    let mut res = vec![0.0; nr];
    let mut jac = DMatrix::zeros(nr, np);
    for _ in 0..8 {
        model.residuals(params, &mut res);
        model.jacobian(params, &mut jac);
        let rhs = nalgebra::DVector::from_iterator(nr, res.iter().map(|r| -r));
        let Ok(step) = jac.clone().svd(true, true).solve(&rhs, 1e-14) else {
            return;
        };
        let before: f64 = res.iter().map(|r| r * r).sum();
        let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
        model.project(&mut trial);
        model.residuals(&trial, &mut res);
        let after: f64 = res.iter().map(|r| r * r).sum();
        // Allow rounding-level increases only.
        if !(after <= before * (1.0 + 1e-12) + 1e-300) {
            return;
        }
        let done = params
            .iter()
            .zip(&trial)
            .all(|(p, t)| (t - p).abs() <= 1e-15 * p.abs().max(1e-300));
        params.copy_from_slice(&trial);
        if done {
            return;
        }
    }
}

/// Fits `1/ξ(K)` to `(K, ξ)` pairs. Needs at least three points on each side
/// of the ξ maximum. The fit is invariant under a global rescaling of ξ:
/// data are normalised before fitting and α, β are scaled back afterwards.
pub fn fit_critical(points: &[(f64, f64)], opts: &CriticalFitOptions) -> Result<CriticalFit> {
    if points
        .iter()
        .any(|&(k, xi)| !k.is_finite() || !(xi > 0.0) || !xi.is_finite())
    {
        return Err(Error::InsufficientData(
            "xi must be positive and finite".into(),
        ));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let imax = (0..pts.len())
        .max_by(|&a, &b| pts[a].1.total_cmp(&pts[b].1))
        .ok_or_else(|| Error::InsufficientData("no points".into()))?;
    let (below, above) = (imax, pts.len() - imax - 1);
    if below < 3 || above < 3 {
        return Err(Error::InsufficientData(format!(
            "need 3 points on each side of the xi maximum, have {below} below and {above} above"
        )));
    }
    let k: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let max_xi = pts[imax].1;
    let y: Vec<f64> = pts.iter().map(|p| max_xi / p.1).collect();
    let model = Model {
        k: &k,
        y: &y,
        shared: opts.shared_alpha,
        k_range: (k[0], k[k.len() - 1]),
    };

    // Starts: K_c at the ξ maximum and halfway towards either neighbour.
    let starts = [
        pts[imax].0,
        0.5 * (pts[imax].0 + pts[imax - 1].0),
        0.5 * (pts[imax].0 + pts[imax + 1].0),
    ];
    let mut best: Option<LmSolution> = None;
    let mut last_err = None;
    for &kc in &starts {
        let nu = 1.5;
        let beta = 1.0; // 1/max ξ in normalised units
        let alpha_at = |i: usize| {
            ((y[i] - beta).max(1e-12) / (k[i] - kc).abs().max(1e-12).powf(nu)).max(1e-12)
        };
        let (al, ad) = (alpha_at(0), alpha_at(k.len() - 1));
        let start = if opts.shared_alpha {
            vec![0.5 * (al + ad), beta, kc, nu]
        } else {
            vec![al, ad, beta, kc, nu]
        };
        match levenberg_marquardt(&model, &start, opts.lm) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.chi2 < b.chi2) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(mut sol) = best else {
        return Err(last_err.unwrap_or(Error::NonConvergence { iterations: 0 }));
    };
    // Polish with plain Gauss-Newton steps: near the minimum the cost is
    // flat to rounding, so LM's acceptance test stalls about sqrt(eps) short
    // of the optimum and the result would depend on the gauge of the input.
    gauss_newton_polish(&model, &mut sol.params);

    // Undo the normalisation: α and β scale with 1/ξ_max.
    let s = 1.0 / max_xi;
    let off = usize::from(!opts.shared_alpha);
    let mut scale = vec![s; 2 + off];
    scale.extend([1.0, 1.0]);
    let p = &sol.params;
    let e: Vec<f64> = (0..p.len()).map(|i| sol.std_err(i)).collect();
    let build = |v: &[f64]| CriticalParams {
        alpha_loc: v[0] * scale[0],
        alpha_diff: v[off] * scale[off],
        beta: v[1 + off] * scale[1 + off],
        k_c: v[2 + off],
        nu: v[3 + off],
    };
    let covariance = DMatrix::from_fn(p.len(), p.len(), |i, j| {
        sol.covariance[(i, j)] * scale[i] * scale[j]
    });
    Ok(CriticalFit {
        params: build(p),
        errors: build(&e),
        covariance,
        chi2: sol.chi2 * s * s,
        dof: sol.dof,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(truth: CriticalParams, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let k = 4.0 + 5.0 * i as f64 / (n - 1) as f64;
                (k, 1.0 / truth.inverse_xi(k))
            })
            .collect()
    }

    fn reference() -> CriticalParams {
        CriticalParams {
            alpha_loc: 1.0,
            alpha_diff: 1.0,
            beta: 0.1,
            k_c: 6.6,
            nu: 1.6,
        }
    }

    #[test]
    fn recovers_exact_parameters() {
        let fit =
            fit_critical(&synthetic(reference(), 20), &CriticalFitOptions::default()).unwrap();
        let p = fit.params;
        for (got, want) in [
            (p.alpha_loc, 1.0),
            (p.alpha_diff, 1.0),
            (p.beta, 0.1),
            (p.k_c, 6.6),
            (p.nu, 1.6),
        ] {
            assert!((got - want).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn shared_alpha_mode() {
        let truth = CriticalParams {
            alpha_loc: 0.7,
            alpha_diff: 0.7,
            beta: 0.05,
            k_c: 6.3,
            nu: 1.3,
        };
        let opts = CriticalFitOptions {
            shared_alpha: true,
            ..Default::default()
        };
        let p = fit_critical(&synthetic(truth, 16), &opts).unwrap().params;
        assert!(
            (p.k_c - 6.3).abs() < 1e-6 && (p.nu - 1.3).abs() < 1e-6,
            "{p:?}"
        );
        assert_eq!(p.alpha_loc, p.alpha_diff);
    }

    #[test]
    fn kink_without_cutoff() {
        let truth = CriticalParams {
            alpha_loc: 2.0,
            alpha_diff: 0.5,
            beta: 0.0,
            k_c: 6.55,
            nu: 1.0,
        };
        let p = fit_critical(&synthetic(truth, 21), &CriticalFitOptions::default())
            .unwrap()
            .params;
        assert!((p.k_c - 6.55).abs() < 1e-8, "{p:?}");
        assert!((p.nu - 1.0).abs() < 1e-8 && p.beta.abs() < 1e-8, "{p:?}");
    }

    #[test]
    fn gauge_invariant() {
        let truth = CriticalParams {
            alpha_loc: 1.3,
            alpha_diff: 0.8,
            beta: 0.2,
            k_c: 6.4,
            nu: 1.7,
        };
        // Mildly perturbed so the fit is not exact.
        let pts: Vec<(f64, f64)> = synthetic(truth, 16)
            .into_iter()
            .enumerate()
            .map(|(i, (k, xi))| (k, xi * (1.0 + 0.03 * ((i * 7 % 5) as f64 - 2.0))))
            .collect();
        let a = fit_critical(&pts, &CriticalFitOptions::default())
            .unwrap()
            .params;
        for c in [1e-3, 0.37, 25.0] {
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(k, xi)| (k, c * xi)).collect();
            let b = fit_critical(&scaled, &CriticalFitOptions::default())
                .unwrap()
                .params;
            assert!(
                (a.k_c - b.k_c).abs() < 1e-10 && (a.nu - b.nu).abs() < 1e-10,
                "{a:?} {b:?}"
            );
            assert!((a.beta - c * b.beta).abs() < 1e-9 * a.beta.max(1e-6));
        }
    }

    #[test]
    fn needs_points_on_both_sides() {
        let pts: Vec<(f64, f64)> = (0..8).map(|i| (4.0 + i as f64, 1.0 + i as f64)).collect();
        assert!(matches!(
            fit_critical(&pts, &CriticalFitOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn non_convergence_reported() {
        let opts = CriticalFitOptions {
            lm: LmOptions {
                max_iterations: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let pts: Vec<(f64, f64)> = synthetic(reference(), 20)
            .into_iter()
            .enumerate()
            .map(|(i, (k, xi))| (k, xi * (1.0 + 0.02 * (i % 3) as f64)))
            .collect();
        assert!(matches!(
            fit_critical(&pts, &opts),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn ill_conditioning_reported() {
        let opts = CriticalFitOptions {
            lm: LmOptions {
                max_condition: 1.0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(
            fit_critical(&synthetic(reference(), 20), &opts),
            Err(Error::IllConditioned { .. })
        ));
    }
}
