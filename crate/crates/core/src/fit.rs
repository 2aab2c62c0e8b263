//! Least-squares building blocks: weighted straight-line fits and a bounded
//! Levenberg–Marquardt solver with covariance estimates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Coefficient of determination (weighted when weights are given).
    pub r_squared: f64,
    pub points: usize,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Weighted least-squares line `y = a + b x`. Parameter errors come from the
/// covariance scaled by the reduced chi-square, so they are meaningful even
/// when the weights are only relative.
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::InsufficientData(
            "length mismatch in line fit".into(),
        ));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs 2 points, got {n}"
        )));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        sw += w(i);
        sx += w(i) * x[i];
        sy += w(i) * y[i];
    }
    if !(sw > 0.0) {
        return Err(Error::InsufficientData("weights sum to zero".into()));
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += w(i) * dx * dx;
        sxy += w(i) * dx * dy;
        syy += w(i) * dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = (0..n)
        .map(|i| w(i) * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let (slope_err, intercept_err) = if n > 2 {
        let s2 = ss_res / (n - 2) as f64;
        ((s2 / sxx).sqrt(), (s2 * (1.0 / sw + mx * mx / sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_err,
        intercept_err,
        r_squared,
        points: n,
    })
}

/// A residual model for [`levenberg_marquardt`].
pub trait LsqModel {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    /// Weighted residuals `(model - data) / sigma`.
    fn residuals(&self, params: &[f64], out: &mut [f64]);
    /// d residual_i / d param_j, row-major per residual.
    fn jacobian(&self, params: &[f64], out: &mut DMatrix<f64>);
    /// Clamps parameters into their admissible region.
    fn project(&self, _params: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when every parameter moves by less than this relative amount.
    pub rel_tol: f64,
    /// Also stop when an accepted step lowers the cost by less than this
    /// relative amount (0 disables the test).
    pub cost_tol: f64,
    /// Largest acceptable condition number of the column-normalised normal
    /// matrix at the solution.
    pub max_condition: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tol: 1e-8,
            cost_tol: 0.0,
            max_condition: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// Covariance scaled by the reduced chi-square (NaN without spare
    /// degrees of freedom).
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    pub condition: f64,
}

impl LmSolution {
    pub fn std_err(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

fn cost_of(model: &dyn LsqModel, params: &[f64], buf: &mut [f64]) -> f64 {
    model.residuals(params, buf);
    let c: f64 = buf.iter().map(|r| r * r).sum();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// Bounded Levenberg–Marquardt with Marquardt diagonal scaling. Bounds are
/// enforced by projecting each trial point through [`LsqModel::project`].
pub fn levenberg_marquardt(
    model: &dyn LsqModel,
    start: &[f64],
    opts: LmOptions,
) -> Result<LmSolution> {
    let np = model.n_params();
    let nr = model.n_residuals();
    assert_eq!(start.len(), np);
    let mut params = start.to_vec();
    model.project(&mut params);
    let mut res = vec![0.0; nr];
    let mut trial_res = vec![0.0; nr];
    let mut jac = DMatrix::zeros(nr, np);
    let mut cost = cost_of(model, &params, &mut res);
    if !cost.is_finite() {
        return Err(Error::NonConvergence { iterations: 0 });
    }
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        model.jacobian(&params, &mut jac);
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&res);
        let mut accepted = false;
        while lambda < 1e20 {
            // Parameters pinned at a bound by the projection are held fixed
            // and the step is re-solved for the others.
            let solve = |fixed: &[bool]| {
                let mut damped = a.clone();
                let mut rhs = -&g;
                for i in 0..np {
                    let d = a[(i, i)].max(1e-300);
                    damped[(i, i)] += lambda * d;
                    if fixed[i] {
                        damped.row_mut(i).fill(0.0);
                        damped.column_mut(i).fill(0.0);
                        damped[(i, i)] = 1.0;
                        rhs[i] = 0.0;
                    }
                }
                damped.cholesky().map(|c| c.solve(&rhs))
            };
            let mut fixed = vec![false; np];
            let Some(mut delta) = solve(&fixed) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = params
                .iter()
                .zip(delta.iter())
                .map(|(p, d)| p + d)
                .collect();
            model.project(&mut trial);
            for i in 0..np {
                fixed[i] = trial[i] == params[i] && delta[i] != 0.0;
            }
            if fixed.iter().any(|&f| f) {
                let Some(d) = solve(&fixed) else {
                    lambda *= 10.0;
                    continue;
                };
                delta = d;
                trial = params
                    .iter()
                    .zip(delta.iter())
                    .map(|(p, d)| p + d)
                    .collect();
                model.project(&mut trial);
            }
            let trial_cost = cost_of(model, &trial, &mut trial_res);
            if trial_cost <= cost {
                let small = params
                    .iter()
                    .zip(&trial)
                    .all(|(p, t)| (t - p).abs() <= opts.rel_tol * (p.abs() + opts.rel_tol));
                params = trial;
                std::mem::swap(&mut res, &mut trial_res);
                let improvement = cost - trial_cost;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if small || improvement <= opts.cost_tol.max(1e-30) * cost.max(1e-300) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No downhill step exists at any damping: we sit at a (possibly
            // bounded) minimum to working precision.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }

    model.jacobian(&params, &mut jac);
    let a = jac.transpose() * &jac;
    let scale: Vec<f64> = (0..np).map(|i| a[(i, i)].sqrt().max(1e-300)).collect();
    let normalized = DMatrix::from_fn(np, np, |i, j| a[(i, j)] / (scale[i] * scale[j]));
    let sv = normalized.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= opts.max_condition) {
        return Err(Error::IllConditioned { condition });
    }
    let dof = nr.saturating_sub(np);
    let chi2 = cost;
    let inv = a.try_inverse().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let covariance = if dof > 0 {
        inv * (chi2 / dof as f64)
    } else {
        DMatrix::from_element(np, np, f64::NAN)
    };
    Ok(LmSolution {
        params,
        covariance,
        chi2,
        dof,
        iterations,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = fit_line(&x, &y, None).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-13);
        assert!(f.slope_err < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn noisy_line_error_bar() {
        // Alternating ±1 noise on a flat line: slope error follows the textbook formula.
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..8)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let f = fit_line(&x, &y, None).unwrap();
        let sxx: f64 = x.iter().map(|v| (v - 3.5) * (v - 3.5)).sum();
        let ss: f64 = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - f.eval(*xi)).powi(2))
            .sum();
        assert!((f.slope_err - (ss / 6.0 / sxx).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn line_needs_spread() {
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0], None).is_err());
        assert!(fit_line(&[1.0], &[0.0], None).is_err());
    }

    struct Exp {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl LsqModel for Exp {
        fn n_params(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            self.x.len()
        }
        fn residuals(&self, p: &[f64], out: &mut [f64]) {
            for (i, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
                out[i] = p[0] * (-p[1] * x).exp() - y;
            }
        }
        fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
            for (i, &x) in self.x.iter().enumerate() {
                let e = (-p[1] * x).exp();
                out[(i, 0)] = e;
                out[(i, 1)] = -p[0] * x * e;
            }
        }
    }

    #[test]
    fn lm_recovers_exponential() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y = x.iter().map(|v| 3.0 * (-0.7 * v).exp()).collect();
        let model = Exp { x, y };
        let sol = levenberg_marquardt(&model, &[1.0, 0.1], LmOptions::default()).unwrap();
        assert!((sol.params[0] - 3.0).abs() < 1e-9);
        assert!((sol.params[1] - 0.7).abs() < 1e-9);
    }
}
