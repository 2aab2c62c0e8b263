use std::io::Write;

use crate::error::{Error, Result};
use crate::observables::InvSqPoint;

/// Earliest kick count used in the scaling analysis.
pub const DEFAULT_WINDOW_START: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPoint {
    pub t: u32,
    pub lambda: f64,
    pub err: f64,
}

/// Λ(t) = Π₀⁻²(t) t^{-2/3} for one kick strength.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCurve {
    pub kick: f64,
    pub points: Vec<LambdaPoint>,
}

impl ScalingCurve {
    /// Mean of ln Λ over the curve.
    pub fn mean_log_level(&self) -> f64 {
        self.points.iter().map(|p| p.lambda.ln()).sum::<f64>() / self.points.len() as f64
    }

    /// Writes `K,t,lambda,lambda_err` rows; the header is optional so that
    /// several curves can share one file.
    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "K,t,lambda,lambda_err")?;
        }
        for p in &self.points {
            writeln!(out, "{},{},{:e},{:e}", self.kick, p.t, p.lambda, p.err)?;
        }
        Ok(())
    }
}

/// Rescales Π₀⁻²(t) by t^{-2/3} for `t_min <= t <= t_max`.
pub fn lambda_series(
    kick: f64,
    inv_sq: &[InvSqPoint],
    t_min: u32,
    t_max: Option<u32>,
) -> Result<ScalingCurve> {
    let t_max = t_max.unwrap_or(u32::MAX);
    let points: Vec<LambdaPoint> = inv_sq
        .iter()
        .filter(|p| p.t >= t_min.max(1) && p.t <= t_max)
        .map(|p| {
            let scale = (p.t as f64).powf(-2.0 / 3.0);
            LambdaPoint {
                t: p.t,
                lambda: p.value * scale,
                err: p.err * scale,
            }
        })
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(ScalingCurve { kick, points })
}

/// Averages a curve over bins of equal width in ln t (`per_decade` bins per
/// decade) that are also at least `min_kicks` kicks wide. Bins start at the
/// first point of the curve; ln Λ and ln t are averaged within each bin.
/// Kick-to-kick structure common to all realizations (and so surviving the
/// ensemble average) is smoothed out this way.
pub fn log_binned(curve: &ScalingCurve, per_decade: u32, min_kicks: u32) -> ScalingCurve {
    let ratio = 10f64.powf(1.0 / per_decade.max(1) as f64);
    let mut points = Vec::new();
    let mut rest = curve.points.as_slice();
    while let Some(first) = rest.first() {
        let start = first.t as f64;
        let end = (start * ratio).max(start + min_kicks as f64);
        let len = rest
            .iter()
            .take_while(|p| (p.t as f64) < end)
            .count()
            .max(1);
        let (bin, tail) = rest.split_at(len);
        let n = bin.len() as f64;
        let ln_t = bin.iter().map(|p| (p.t as f64).ln()).sum::<f64>() / n;
        let ln_l = bin.iter().map(|p| p.lambda.ln()).sum::<f64>() / n;
        let rel = bin
            .iter()
            .map(|p| (p.err / p.lambda).powi(2))
            .sum::<f64>()
            .sqrt()
            / n;
        let lambda = ln_l.exp();
        points.push(LambdaPoint {
            t: ln_t.exp().round() as u32,
            lambda,
            err: lambda * rel,
        });
        rest = tail;
    }
    ScalingCurve {
        kick: curve.kick,
        points,
    }
}
