//! Ensemble observables: zero-momentum population Π₀(t), kinetic energy
//! ⟨p²⟩(t), pooled and typical momentum distributions and their shape
//! classification.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::rotor::{RealizationSeries, Record, Snapshot};

/// Π₀ below this is treated as an empty zero-momentum class.
pub const PI0_FLOOR: f64 = 1e-12;

/// Densities below this are ignored by [`fit_shape`].
pub const DENSITY_FLOOR: f64 = 1e-6;

/// Below this R² neither shape model is accepted.
pub const SHAPE_R2_MIN: f64 = 0.95;

/// Ensemble means and standard errors of the recorded observables.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<u32>,
    pub pi0: Vec<f64>,
    pub pi0_err: Vec<f64>,
    pub p2: Vec<f64>,
    pub p2_err: Vec<f64>,
    pub n_realizations: usize,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `t,pi0,pi0_err,pi0_inv_sq,p2` with a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,pi0,pi0_err,pi0_inv_sq,p2")?;
        for i in 0..self.len() {
            let inv_sq = if self.pi0[i] > 0.0 {
                1.0 / (self.pi0[i] * self.pi0[i])
            } else {
                f64::INFINITY
            };
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e}",
                self.times[i], self.pi0[i], self.pi0_err[i], inv_sq, self.p2[i]
            )?;
        }
        Ok(())
    }
}

/// Welford accumulator over realizations, fed in a fixed order so that the
/// floating-point result does not depend on how the work was scheduled.
#[derive(Debug, Clone, Default)]
pub struct EnsembleAccumulator {
    times: Vec<u32>,
    count: usize,
    pi0_mean: Vec<f64>,
    pi0_m2: Vec<f64>,
    p2_mean: Vec<f64>,
    p2_m2: Vec<f64>,
}

impl EnsembleAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, records: &[Record]) -> Result<()> {
        if self.count == 0 {
            self.times = records.iter().map(|r| r.t).collect();
            let n = records.len();
            self.pi0_mean = vec![0.0; n];
            self.pi0_m2 = vec![0.0; n];
            self.p2_mean = vec![0.0; n];
            self.p2_m2 = vec![0.0; n];
        } else if records.len() != self.times.len()
            || records.iter().zip(&self.times).any(|(r, &t)| r.t != t)
        {
            return Err(Error::MismatchedTimes);
        }
        self.count += 1;
        let k = self.count as f64;
        for (i, r) in records.iter().enumerate() {
            let d = r.pi0 - self.pi0_mean[i];
            self.pi0_mean[i] += d / k;
            self.pi0_m2[i] += d * (r.pi0 - self.pi0_mean[i]);
            let d = r.p2 - self.p2_mean[i];
            self.p2_mean[i] += d / k;
            self.p2_m2[i] += d * (r.p2 - self.p2_mean[i]);
        }
        Ok(())
    }

    /// Standard errors are zero for a single realization.
    pub fn finish(self) -> Result<TimeSeries> {
        if self.count == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let n = self.count as f64;
        let sem = |m2: &[f64]| -> Vec<f64> {
            m2.iter()
                .map(|&v| {
                    if self.count > 1 {
                        (v / (n - 1.0) / n).max(0.0).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        Ok(TimeSeries {
            pi0_err: sem(&self.pi0_m2),
            p2_err: sem(&self.p2_m2),
            times: self.times,
            pi0: self.pi0_mean,
            p2: self.p2_mean,
            n_realizations: self.count,
        })
    }
}

/// Ensemble means of |c₀|² and ⟨p²⟩ with standard errors of the mean.
pub fn ensemble_series(series: &[RealizationSeries]) -> Result<TimeSeries> {
    let mut acc = EnsembleAccumulator::new();
    for s in series {
        acc.push(&s.records)?;
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvSqPoint {
    pub t: u32,
    pub value: f64,
    pub err: f64,
}

/// Π₀⁻²(t) with first-order error propagation.
pub fn pi0_inverse_squared(ts: &TimeSeries) -> Result<Vec<InvSqPoint>> {
    ts.times
        .iter()
        .zip(ts.pi0.iter().zip(&ts.pi0_err))
        .map(|(&t, (&pi0, &err))| {
            if !(pi0 > PI0_FLOOR) {
                return Err(Error::ZeroPopulation { t, value: pi0 });
            }
            let value = 1.0 / (pi0 * pi0);
            Ok(InvSqPoint {
                t,
                value,
                err: 2.0 * value * err / pi0,
            })
        })
        .collect()
}

/// Histogram of momentum probability, normalised to unit integral.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDistribution {
    pub t: u32,
    pub bin_width: f64,
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
}

impl MomentumDistribution {
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,p,density")?;
        for (p, d) in self.centers.iter().zip(&self.density) {
            writeln!(out, "{},{:e},{:e}", self.t, p, d)?;
        }
        Ok(())
    }
}

fn check_snapshots(snapshots: &[Snapshot], bin_width: f64) -> Result<u32> {
    let first = snapshots.first().ok_or(Error::EmptyEnsemble)?;
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::InvalidParams(format!(
            "bin width must be > 0, got {bin_width}"
        )));
    }
    if snapshots.iter().any(|s| s.t != first.t) {
        return Err(Error::MismatchedTimes);
    }
    Ok(first.t)
}

/// Bin index range covering every snapshot and the binning function.
fn bin_range(snapshots: &[Snapshot], bin_width: f64) -> (i64, i64, impl Fn(f64) -> i64) {
    let bin_of = move |p: f64| (p / bin_width + 0.5).floor() as i64;
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for s in snapshots {
        for (p, _) in s.momenta() {
            let b = bin_of(p);
            lo = lo.min(b);
            hi = hi.max(b);
        }
    }
    (lo, hi, bin_of)
}

fn normalised(
    t: u32,
    bin_width: f64,
    lo: i64,
    hi: i64,
    mass: Vec<f64>,
) -> Result<MomentumDistribution> {
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyEnsemble);
    }
    Ok(MomentumDistribution {
        t,
        bin_width,
        centers: (lo..=hi).map(|b| b as f64 * bin_width).collect(),
        density: mass.iter().map(|m| m / (total * bin_width)).collect(),
    })
}

/// Pools the final |c_m|² of every realization at p_m = ħ(m+q) into bins of
/// width `bin_width` centred on multiples of the width.
pub fn momentum_distribution(
    snapshots: &[Snapshot],
    bin_width: f64,
) -> Result<MomentumDistribution> {
    let t = check_snapshots(snapshots, bin_width)?;
    let (lo, hi, bin_of) = bin_range(snapshots, bin_width);
    let mut mass = vec![0.0; (hi - lo + 1) as usize];
    for s in snapshots {
        for (p, w) in s.momenta() {
            mass[(bin_of(p) - lo) as usize] += w;
        }
    }
    normalised(t, bin_width, lo, hi, mass)
}

/// Typical distribution: the exponential of the ensemble-averaged
/// log-histogram, renormalised. Same bins as [`momentum_distribution`].
///
/// Localized eigenstates have log-normally fluctuating tails, so the
/// arithmetic mean is dominated by rare realizations while the log-average
/// keeps the exponential profile of a typical state.
pub fn typical_distribution(
    snapshots: &[Snapshot],
    bin_width: f64,
) -> Result<MomentumDistribution> {
    let t = check_snapshots(snapshots, bin_width)?;
    let (lo, hi, bin_of) = bin_range(snapshots, bin_width);
    let len = (hi - lo + 1) as usize;
    let mut log_mean = vec![0.0; len];
    let mut hist = vec![0.0; len];
    for s in snapshots {
        hist.iter_mut().for_each(|h| *h = 0.0);
        for (p, w) in s.momenta() {
            hist[(bin_of(p) - lo) as usize] += w;
        }
        for (l, h) in log_mean.iter_mut().zip(&hist) {
            *l += h.max(f64::MIN_POSITIVE).ln();
        }
    }
    let n = snapshots.len() as f64;
    normalised(
        t,
        bin_width,
        lo,
        hi,
        log_mean.iter().map(|l| (l / n).exp()).collect(),
    )
}

/// Writes `t,p,density,typical` for two distributions on the same bins.
pub fn write_distributions_csv<W: Write>(
    mean: &MomentumDistribution,
    typical: &MomentumDistribution,
    mut out: W,
) -> Result<()> {
    if mean.centers != typical.centers {
        return Err(Error::InvalidParams(
            "distributions use different bins".into(),
        ));
    }
    writeln!(out, "t,p,density,typical")?;
    for i in 0..mean.centers.len() {
        writeln!(
            out,
            "{},{:e},{:e},{:e}",
            mean.t, mean.centers[i], mean.density[i], typical.density[i]
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Exponential,
    Gaussian,
    Undetermined,
}

impl ShapeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeKind::Exponential => "exponential",
            ShapeKind::Gaussian => "gaussian",
            ShapeKind::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFit {
    pub kind: ShapeKind,
    /// Decay length of exp(-|p|/p_loc), when the log-density falls linearly in |p|.
    pub p_loc: Option<f64>,
    /// Width of exp(-p²/2σ²), when the log-density falls linearly in p².
    pub sigma: Option<f64>,
    pub r2_exponential: f64,
    pub r2_gaussian: f64,
    pub bins_used: usize,
}

/// Compares exponential and Gaussian models by straight-line fits of the
/// log-density against |p| and p². The central bin and bins below
/// [`DENSITY_FLOOR`] are excluded.
pub fn fit_shape(dist: &MomentumDistribution) -> Result<ShapeFit> {
    let half = dist.bin_width / 2.0;
    let (mut abs_p, mut sq_p, mut log_d) = (Vec::new(), Vec::new(), Vec::new());
    for (&p, &d) in dist.centers.iter().zip(&dist.density) {
        if p.abs() < half || d < DENSITY_FLOOR {
            continue;
        }
        abs_p.push(p.abs());
        sq_p.push(p * p);
        log_d.push(d.ln());
    }
    if abs_p.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "shape fit needs 20 bins above the density floor, got {}",
            abs_p.len()
        )));
    }
    let exp_fit = fit_line(&abs_p, &log_d, None)?;
    let gauss_fit = fit_line(&sq_p, &log_d, None)?;
    let p_loc = (exp_fit.slope < 0.0).then(|| -1.0 / exp_fit.slope);
    let sigma = (gauss_fit.slope < 0.0).then(|| (-0.5 / gauss_fit.slope).sqrt());
    let (r2e, r2g) = (exp_fit.r_squared, gauss_fit.r_squared);
    let kind = if r2e < SHAPE_R2_MIN && r2g < SHAPE_R2_MIN {
        ShapeKind::Undetermined
    } else if r2e >= r2g && p_loc.is_some() {
        ShapeKind::Exponential
    } else if r2g > r2e && sigma.is_some() {
        ShapeKind::Gaussian
    } else {
        ShapeKind::Undetermined
    };
    Ok(ShapeFit {
        kind,
        p_loc,
        sigma,
        r2_exponential: r2e,
        r2_gaussian: r2g,
        bins_used: abs_p.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[(u32, f64, f64)]) -> RealizationSeries {
        RealizationSeries {
            records: values
                .iter()
                .map(|&(t, pi0, p2)| Record { t, pi0, p2 })
                .collect(),
            snapshot: Snapshot {
                t: 0,
                q: 0.0,
                hbar: 1.0,
                probs: vec![1.0],
            },
        }
    }

    #[test]
    fn duplicated_series_has_zero_error() {
        let s = series(&[(0, 1.0, 0.0), (5, 0.3, 12.0)]);
        let ts = ensemble_series(&[s.clone(), s]).unwrap();
        assert_eq!(ts.pi0, vec![1.0, 0.3]);
        assert_eq!(ts.p2, vec![0.0, 12.0]);
        assert!(ts.pi0_err.iter().all(|&e| e == 0.0));
        assert_eq!(ts.n_realizations, 2);
    }

    #[test]
    fn arithmetic_mean() {
        let a = series(&[(3, 0.2, 1.0)]);
        let b = series(&[(3, 0.4, 3.0)]);
        let ts = ensemble_series(&[a, b]).unwrap();
        assert!((ts.pi0[0] - 0.3).abs() < 1e-15);
        assert!((ts.p2[0] - 2.0).abs() < 1e-15);
        // sample std 0.1414.., divided by sqrt(2)
        assert!((ts.pi0_err[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mismatched_times_rejected() {
        let a = series(&[(3, 0.2, 1.0)]);
        let b = series(&[(4, 0.4, 3.0)]);
        assert!(matches!(
            ensemble_series(&[a, b]),
            Err(Error::MismatchedTimes)
        ));
        assert!(matches!(ensemble_series(&[]), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn inverse_square_values() {
        let ts = TimeSeries {
            times: vec![0, 1],
            pi0: vec![1.0, 0.5],
            pi0_err: vec![0.0, 0.05],
            p2: vec![0.0, 1.0],
            p2_err: vec![0.0, 0.0],
            n_realizations: 2,
        };
        let inv = pi0_inverse_squared(&ts).unwrap();
        assert_eq!(inv[0].value, 1.0);
        assert_eq!(inv[1].value, 4.0);
        // relative error doubles: 10% -> 20%
        assert!((inv[1].err - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_population_rejected() {
        let ts = TimeSeries {
            times: vec![7],
            pi0: vec![1e-13],
            pi0_err: vec![0.0],
            p2: vec![1.0],
            p2_err: vec![0.0],
            n_realizations: 1,
        };
        assert!(matches!(
            pi0_inverse_squared(&ts),
            Err(Error::ZeroPopulation { t: 7, .. })
        ));
    }

    #[test]
    fn plane_wave_distribution() {
        let mut probs = vec![0.0; 16];
        probs[8] = 1.0;
        let snap = Snapshot {
            t: 0,
            q: 0.0,
            hbar: 2.89,
            probs,
        };
        let d = momentum_distribution(&[snap], 2.89).unwrap();
        let zero = d.centers.iter().position(|&p| p == 0.0).unwrap();
        assert!((d.density[zero] * d.bin_width - 1.0).abs() < 1e-12);
        assert!((d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_distribution_is_flat() {
        let probs = vec![1.0 / 64.0; 64];
        let snap = Snapshot {
            t: 3,
            q: 0.25,
            hbar: 1.0,
            probs,
        };
        let d = momentum_distribution(&[snap.clone(), snap], 1.0).unwrap();
        let first = d.density[0];
        assert!(d.density.iter().all(|&v| (v - first).abs() < 1e-12));
        assert!((d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_errors() {
        assert!(matches!(
            momentum_distribution(&[], 1.0),
            Err(Error::EmptyEnsemble)
        ));
        let a = Snapshot {
            t: 1,
            q: 0.0,
            hbar: 1.0,
            probs: vec![1.0],
        };
        let b = Snapshot { t: 2, ..a.clone() };
        assert!(momentum_distribution(std::slice::from_ref(&a), 0.0).is_err());
        assert!(matches!(
            momentum_distribution(&[a, b], 1.0),
            Err(Error::MismatchedTimes)
        ));
    }

    #[test]
    fn typical_is_geometric_mean() {
        let a = Snapshot {
            t: 5,
            q: 0.0,
            hbar: 1.0,
            probs: vec![0.1, 0.8, 0.1],
        };
        let b = Snapshot {
            t: 5,
            q: 0.0,
            hbar: 1.0,
            probs: vec![0.4, 0.2, 0.4],
        };
        let d = typical_distribution(&[a.clone(), b.clone()], 1.0).unwrap();
        let raw = [0.2f64, 0.4, 0.2];
        let z: f64 = raw.iter().sum();
        for (got, want) in d.density.iter().zip(raw) {
            assert!((got - want / z).abs() < 1e-12);
        }
        let m = momentum_distribution(&[a, b], 1.0).unwrap();
        assert_eq!(m.centers, d.centers);
        let mut buf = Vec::new();
        write_distributions_csv(&m, &d, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t,p,density,typical\n5,-1e0,2.5e-1,"));
    }

    #[test]
    fn typical_of_identical_snapshots_equals_mean() {
        let probs: Vec<f64> = (0..32)
            .map(|m| (-((m as f64) - 16.0).abs() / 3.0).exp())
            .collect();
        let snap = Snapshot {
            t: 0,
            q: 0.1,
            hbar: 2.0,
            probs,
        };
        let m = momentum_distribution(&[snap.clone(), snap.clone()], 2.0).unwrap();
        let d = typical_distribution(&[snap.clone(), snap], 2.0).unwrap();
        for (a, b) in m.density.iter().zip(&d.density) {
            assert!((a - b).abs() < 1e-12 * a.max(1e-300));
        }
    }

    fn closed_form(f: impl Fn(f64) -> f64, width: f64, half_bins: i64) -> MomentumDistribution {
        let centers: Vec<f64> = (-half_bins..=half_bins).map(|b| b as f64 * width).collect();
        let raw: Vec<f64> = centers.iter().map(|&p| f(p)).collect();
        let norm: f64 = raw.iter().sum::<f64>() * width;
        MomentumDistribution {
            t: 0,
            bin_width: width,
            density: raw.iter().map(|v| v / norm).collect(),
            centers,
        }
    }

    #[test]
    fn exponential_shape_recovered() {
        let d = closed_form(|p| (-p.abs() / 10.0).exp(), 1.0, 200);
        let fit = fit_shape(&d).unwrap();
        assert_eq!(fit.kind, ShapeKind::Exponential);
        assert!((fit.p_loc.unwrap() - 10.0).abs() < 0.2);
    }

    #[test]
    fn gaussian_shape_recovered() {
        let d = closed_form(|p| (-p * p / (2.0 * 225.0)).exp(), 1.0, 200);
        let fit = fit_shape(&d).unwrap();
        assert_eq!(fit.kind, ShapeKind::Gaussian);
        assert!((fit.sigma.unwrap() - 15.0).abs() < 0.3);
    }

    #[test]
    fn flat_or_sparse_shapes() {
        let narrow = closed_form(|p| (-p.abs() * 5.0).exp(), 1.0, 50);
        assert!(matches!(
            fit_shape(&narrow),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn csv_header() {
        let ts = TimeSeries {
            times: vec![0, 2],
            pi0: vec![1.0, 0.5],
            pi0_err: vec![0.0, 0.01],
            p2: vec![0.0, 3.5],
            p2_err: vec![0.0, 0.1],
            n_realizations: 2,
        };
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,pi0,pi0_err,pi0_inv_sq,p2"));
        assert_eq!(lines.next(), Some("0,1e0,0e0,1e0,0e0"));
        assert_eq!(lines.next(), Some("2,5e-1,1e-2,4e0,3.5e0"));
    }
}
