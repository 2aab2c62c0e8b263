use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::observables::InvSqPoint;

/// Half-width of the band around 2/3 classified as critical.
pub const DEFAULT_DELTA: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthExponent {
    pub gamma: f64,
    pub err: f64,
    pub points: usize,
}

/// Default growth window: the last decade of the run, `[t_max/10, t_max]`.
pub fn last_decade(t_max: u32) -> (u32, u32) {
    ((t_max / 10).max(1), t_max)
}

/// Least-squares slope of ln Π₀⁻² against ln t over `[t_lo, t_hi]`,
/// weighted by the inverse variance of ln Π₀⁻² when every point carries a
/// positive error bar.
pub fn fit_growth_exponent(series: &[InvSqPoint], window: (u32, u32)) -> Result<GrowthExponent> {
    let (lo, hi) = window;
    let pts: Vec<&InvSqPoint> = series
        .iter()
        .filter(|p| p.t >= lo.max(1) && p.t <= hi)
        .collect();
    let span = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (b.t as f64 / a.t as f64).log10(),
        _ => 0.0,
    };
    if pts.len() < 5 || span < 0.5 {
        return Err(Error::InsufficientSpan {
            points: pts.len(),
            decades: span,
        });
    }
    let x: Vec<f64> = pts.iter().map(|p| (p.t as f64).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.value.ln()).collect();
    let weights: Option<Vec<f64>> = pts
        .iter()
        .all(|p| p.err > 0.0)
        .then(|| pts.iter().map(|p| (p.value / p.err).powi(2)).collect());
    let fit = fit_line(&x, &y, weights.as_deref())?;
    Ok(GrowthExponent {
        gamma: fit.slope,
        err: fit.slope_err,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Localized,
    Critical,
    Diffusive,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Localized => "localized",
            Regime::Critical => "critical",
            Regime::Diffusive => "diffusive",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "localized" => Ok(Regime::Localized),
            "critical" => Ok(Regime::Critical),
            "diffusive" => Ok(Regime::Diffusive),
            other => Err(Error::InvalidParams(format!("unknown regime '{other}'"))),
        }
    }
}

/// Localized below `2/3 - delta`, diffusive above `2/3 + delta`.
pub fn classify_regime(gamma: f64, delta: f64) -> Regime {
    const CRITICAL: f64 = 2.0 / 3.0;
    if gamma < CRITICAL - delta {
        Regime::Localized
    } else if gamma > CRITICAL + delta {
        Regime::Diffusive
    } else {
        Regime::Critical
    }
}
