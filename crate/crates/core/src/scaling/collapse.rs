//! Assumption-free scaling collapse.
//!
//! Each curve is drawn in the plane `(x, v) = (-(1/3) ln t, ln Λ)`; the
//! scaling hypothesis says that shifting curve K horizontally by `ln ξ_K`
//! puts every curve of a branch on one line `v = ln f(u)`, `ln u = x + ln ξ`.
//! Shifts are found without any model for f:
//!
//! 1. within a branch, order curves by their mean level and chain the
//!    pairwise shifts that minimise the integrated squared vertical
//!    mismatch of neighbouring curves (piecewise-linear interpolation);
//! 2. refit every shift once against a moving-average reference built from
//!    the other curves of the branch;
//! 3. fix the gauge `ξ(K_gauge) = 1` and link the two branches through the
//!    curves they share (the near-critical ones).
//!
//! A near-critical curve whose Λ range lies strictly between the two branch
//! tips cannot be placed and is reported in [`CollapseResult::excluded`].

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scaling::growth::Regime;
use crate::scaling::lambda::ScalingCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Localized,
    Diffusive,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Localized => "localized",
            Branch::Diffusive => "diffusive",
        }
    }

    fn contains(&self, regime: Regime) -> bool {
        matches!(
            (self, regime),
            (_, Regime::Critical)
                | (Branch::Localized, Regime::Localized)
                | (Branch::Diffusive, Regime::Diffusive)
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CollapseOptions {
    /// Half-width, in ln u, of the moving-average reference window.
    pub bandwidth: f64,
    /// Weight multiplier for near-critical curves in the refinement pass.
    pub critical_weight: f64,
    /// Maximum change of a shift allowed in the refinement pass.
    pub refine_range: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            bandwidth: 0.05,
            critical_weight: 0.5,
            refine_range: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveScale {
    pub kick: f64,
    pub xi: f64,
    pub regime: Regime,
}

/// One point of the reconstructed scaling function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPoint {
    pub u: f64,
    pub lambda: f64,
    pub branch: Branch,
    pub kick: f64,
    pub t: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseResult {
    /// ξ per collapsed curve, in input order.
    pub xi: Vec<CurveScale>,
    /// Near-critical curves that overlap neither branch and are left out.
    pub excluded: Vec<f64>,
    /// Pooled points of both branches sorted by u (near-critical curves
    /// appear once per branch).
    pub f_samples: Vec<ScaledPoint>,
    /// RMS of ln Λ about the leave-one-curve-out reference.
    pub residual_rms: f64,
    pub residual_count: usize,
}

impl CollapseResult {
    pub fn xi_of(&self, kick: f64) -> Option<f64> {
        self.xi.iter().find(|c| c.kick == kick).map(|c| c.xi)
    }

    pub fn branch_samples(&self, branch: Branch) -> impl Iterator<Item = &ScaledPoint> {
        self.f_samples.iter().filter(move |p| p.branch == branch)
    }
}

/// A curve in collapse coordinates.
#[derive(Debug, Clone)]
struct Trace {
    curve: usize,
    /// Sorted by x ascending.
    x: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    t: Vec<u32>,
    critical: bool,
}

impl Trace {
    fn new(curve: usize, c: &ScalingCurve, critical: bool) -> Self {
        let mut pts: Vec<(f64, f64, f64, u32)> = c
            .points
            .iter()
            .map(|p| {
                let w = if p.err > 0.0 {
                    (p.lambda / p.err).powi(2)
                } else {
                    1.0
                };
                (-(p.t as f64).ln() / 3.0, p.lambda.ln(), w, p.t)
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Normalise weights per curve to mean 1.
        let mean_w = pts.iter().map(|p| p.2).sum::<f64>() / pts.len() as f64;
        Self {
            curve,
            x: pts.iter().map(|p| p.0).collect(),
            v: pts.iter().map(|p| p.1).collect(),
            w: pts.iter().map(|p| p.2 / mean_w).collect(),
            t: pts.iter().map(|p| p.3).collect(),
            critical,
        }
    }

    fn mean_level(&self) -> f64 {
        self.v.iter().sum::<f64>() / self.v.len() as f64
    }

    fn v_range(&self) -> (f64, f64) {
        self.v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Piecewise-linear v at x (clamped to the ends).
    fn interp(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.v[0];
        }
        if x >= self.x[n - 1] {
            return self.v[n - 1];
        }
        let i = self.x.partition_point(|&xi| xi <= x).clamp(1, n - 1);
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        if x1 == x0 {
            return self.v[i];
        }
        let a = (x - x0) / (x1 - x0);
        self.v[i - 1] * (1.0 - a) + self.v[i] * a
    }

    /// x-span of the points whose v lies within [lo, hi].
    fn x_span_within(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let mut span: Option<(f64, f64)> = None;
        for (&x, &v) in self.x.iter().zip(&self.v) {
            if v >= lo && v <= hi {
                span = Some(span.map_or((x, x), |(a, b)| (a.min(x), b.max(x))));
            }
        }
        span
    }
}

/// Minimises `f` over `[lo, hi]`: a uniform scan followed by golden-section
/// refinement around the best grid point.
fn minimise(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> Option<f64> {
    if !(hi > lo) {
        return None;
    }
    let step = (hi - lo) / grid as f64;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=grid {
        let x = lo + step * i as f64;
        let y = f(x);
        if y.is_finite() && best.is_none_or(|(_, by)| y < by) {
            best = Some((x, y));
        }
    }
    let (bx, _) = best?;
    let (mut a, mut b) = ((bx - step).max(lo), (bx + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc <= fd || !fd.is_finite() {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    if f(mid).is_finite() {
        Some(mid)
    } else {
        Some(bx)
    }
}

/// Horizontal offset `d` that best places `b` (shifted by `d`) on `a`.
fn pair_shift(a: &Trace, b: &Trace, kicks: (f64, f64)) -> Result<f64> {
    let (a_lo, a_hi) = a.v_range();
    let (b_lo, b_hi) = b.v_range();
    let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
    let no_overlap = Error::NoOverlap {
        k_a: kicks.0,
        k_b: kicks.1,
    };
    if !(hi >= lo) {
        return Err(no_overlap);
    }
    let (Some((ax0, ax1)), Some((bx0, bx1))) = (a.x_span_within(lo, hi), b.x_span_within(lo, hi))
    else {
        return Err(no_overlap);
    };
    // Require the overlap to cover a fraction of the shorter matched span.
    let min_len = 0.3 * (ax1 - ax0).min(bx1 - bx0);
    let objective = |d: f64| {
        let (x0, x1) = (ax0.max(bx0 + d), ax1.min(bx1 + d));
        if x1 - x0 < min_len || x1 <= x0 {
            return f64::INFINITY;
        }
        const SAMPLES: usize = 64;
        let mut s = 0.0;
        for k in 0..SAMPLES {
            let x = x0 + (x1 - x0) * (k as f64 + 0.5) / SAMPLES as f64;
            let diff = a.interp(x) - b.interp(x - d);
            s += diff * diff;
        }
        s / SAMPLES as f64
    };
    let (d_lo, d_hi) = (ax0 - bx1, ax1 - bx0);
    if d_hi <= d_lo {
        // Both matched portions are single points: align them directly.
        return Ok(ax0 - bx0);
    }
    minimise(objective, d_lo, d_hi, 400).ok_or(no_overlap)
}

/// Sorted pooled points of a branch for the moving-average reference.
struct Pool {
    /// (x shifted, v, w, trace index)
    pts: Vec<(f64, f64, f64, usize)>,
}

impl Pool {
    fn new(traces: &[Trace], shifts: &[f64], critical_weight: f64) -> Self {
        let mut pts = Vec::new();
        for (i, tr) in traces.iter().enumerate() {
            let cw = if tr.critical { critical_weight } else { 1.0 };
            for k in 0..tr.x.len() {
                pts.push((tr.x[k] + shifts[i], tr.v[k], tr.w[k] * cw, i));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.3.cmp(&b.3)));
        Self { pts }
    }

    /// Weighted local-linear estimate of v at `x` from the points within
    /// `±h`, excluding trace `skip`. A plain mean would be biased wherever
    /// the points are unevenly spread along a sloped curve.
    fn reference(&self, x: f64, h: f64, skip: usize) -> Option<f64> {
        let start = self.pts.partition_point(|p| p.0 < x - h);
        let (mut sw, mut sx, mut sv, mut sxx, mut sxv) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &self.pts[start..] {
            if p.0 > x + h {
                break;
            }
            if p.3 != skip {
                let dx = p.0 - x;
                sw += p.2;
                sx += p.2 * dx;
                sv += p.2 * p.1;
                sxx += p.2 * dx * dx;
                sxv += p.2 * dx * p.1;
            }
        }
        if !(sw > 0.0) {
            return None;
        }
        let (mx, mv) = (sx / sw, sv / sw);
        let var = sxx / sw - mx * mx;
        if var > 1e-6 * h * h {
            let slope = (sxv / sw - mx * mv) / var;
            Some(mv - slope * mx)
        } else {
            Some(mv)
        }
    }
}

struct BranchFit {
    /// Trace indices into the branch's trace list, with final shifts.
    shifts: Vec<f64>,
    traces: Vec<Trace>,
}

/// Chains pairwise shifts in order of mean level. A near-critical curve that
/// shares no Λ range with its neighbour is dropped from this branch (it may
/// still belong to the other one); any other gap is an error.
fn chain(traces: &mut Vec<Trace>, kicks: &[f64]) -> Result<Vec<f64>> {
    'retry: loop {
        let n = traces.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            traces[a]
                .mean_level()
                .partial_cmp(&traces[b].mean_level())
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut shifts = vec![0.0; n];
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            match pair_shift(
                &traces[a],
                &traces[b],
                (kicks[traces[a].curve], kicks[traces[b].curve]),
            ) {
                Ok(d) => shifts[b] = shifts[a] + d,
                Err(Error::NoOverlap { .. }) if traces[a].critical || traces[b].critical => {
                    let drop = if traces[b].critical { b } else { a };
                    traces.remove(drop);
                    continue 'retry;
                }
                Err(e) => return Err(e),
            }
        }
        return Ok(shifts);
    }
}

fn collapse_branch(
    mut traces: Vec<Trace>,
    kicks: &[f64],
    opts: &CollapseOptions,
) -> Result<BranchFit> {
    if traces.len() < 2 {
        return Ok(BranchFit {
            shifts: vec![0.0; traces.len()],
            traces,
        });
    }
    let shifts = chain(&mut traces, kicks)?;
    let n = traces.len();

    // One refinement pass; every curve is refitted against the same pool.
    let pool = Pool::new(&traces, &shifts, opts.critical_weight);
    let refined: Vec<f64> = (0..n)
        .map(|i| {
            let tr = &traces[i];
            let cw = if tr.critical {
                opts.critical_weight
            } else {
                1.0
            };
            let objective = |s: f64| {
                let (mut sw, mut ss, mut covered) = (0.0, 0.0, 0);
                for k in 0..tr.x.len() {
                    if let Some(r) = pool.reference(tr.x[k] + s, opts.bandwidth, i) {
                        let d = tr.v[k] - r;
                        sw += tr.w[k] * cw;
                        ss += tr.w[k] * cw * d * d;
                        covered += 1;
                    }
                }
                if covered < 3 {
                    f64::INFINITY
                } else {
                    ss / sw
                }
            };
            minimise(
                objective,
                shifts[i] - opts.refine_range,
                shifts[i] + opts.refine_range,
                200,
            )
            .unwrap_or(shifts[i])
        })
        .collect();
    Ok(BranchFit {
        shifts: refined,
        traces,
    })
}

/// Collapses `curves` (with their regimes) onto one two-branched scaling
/// function. Near-critical curves join both branches. `gauge_k` selects the
/// curve whose ξ is fixed to 1 (the nearest K is used).
pub fn collapse(
    curves: &[ScalingCurve],
    regimes: &[Regime],
    gauge_k: f64,
    opts: &CollapseOptions,
) -> Result<CollapseResult> {
    assert_eq!(curves.len(), regimes.len());
    if curves.is_empty() {
        return Err(Error::DegenerateBranch("all"));
    }
    for c in curves {
        if c.points.len() < 5 {
            return Err(Error::InsufficientData(format!(
                "curve K = {} has {} points (< 5)",
                c.kick,
                c.points.len()
            )));
        }
        if c.points.iter().any(|p| !(p.lambda > 0.0)) {
            return Err(Error::InsufficientData(format!(
                "curve K = {} has non-positive Lambda",
                c.kick
            )));
        }
    }
    let kicks: Vec<f64> = curves.iter().map(|c| c.kick).collect();

    let mut fits = Vec::new();
    for branch in [Branch::Localized, Branch::Diffusive] {
        let traces: Vec<Trace> = curves
            .iter()
            .zip(regimes)
            .enumerate()
            .filter(|(_, (_, &r))| branch.contains(r))
            .map(|(i, (c, &r))| Trace::new(i, c, r == Regime::Critical))
            .collect();
        fits.push((branch, collapse_branch(traces, &kicks, opts)?));
    }

    // ln ξ per curve and branch, before gauge fixing.
    let mut ln_xi: Vec<[Option<f64>; 2]> = vec![[None, None]; curves.len()];
    for (b, (_, fit)) in fits.iter().enumerate() {
        for (tr, &s) in fit.traces.iter().zip(&fit.shifts) {
            ln_xi[tr.curve][b] = Some(s);
        }
    }

    // Link the diffusive branch to the localized one.
    let shared: Vec<f64> = ln_xi
        .iter()
        .filter_map(|l| match l {
            [Some(a), Some(b)] => Some(a - b),
            _ => None,
        })
        .collect();
    let link = if !shared.is_empty() {
        shared.iter().sum::<f64>() / shared.len() as f64
    } else {
        // No common curve: give the curves nearest the tip the same ξ.
        let tip = |b: usize| -> Option<f64> {
            let fit = &fits[b].1;
            let pick = fit.traces.iter().zip(&fit.shifts).max_by(|x, y| {
                let (lx, ly) = (x.0.mean_level(), y.0.mean_level());
                if b == 0 {
                    lx.total_cmp(&ly)
                } else {
                    ly.total_cmp(&lx)
                }
            })?;
            Some(*pick.1)
        };
        match (tip(0), tip(1)) {
            (Some(a), Some(b)) => a - b,
            _ => 0.0,
        }
    };
    let mut shifts_by_branch = [
        fits[0].1.shifts.clone(),
        fits[1]
            .1
            .shifts
            .iter()
            .map(|s| s + link)
            .collect::<Vec<_>>(),
    ];

    // Gauge.
    let gauge_curve = (0..curves.len())
        .min_by(|&a, &b| {
            (kicks[a] - gauge_k)
                .abs()
                .total_cmp(&(kicks[b] - gauge_k).abs())
        })
        .unwrap();
    let gauge_shift = {
        let mut found = None;
        for (b, (_, fit)) in fits.iter().enumerate() {
            if let Some(pos) = fit.traces.iter().position(|t| t.curve == gauge_curve) {
                found.get_or_insert(shifts_by_branch[b][pos]);
            }
        }
        found.unwrap_or(0.0)
    };
    for s in shifts_by_branch.iter_mut().flatten() {
        *s -= gauge_shift;
    }

    let mut per_curve: Vec<Vec<f64>> = vec![Vec::new(); curves.len()];
    for (b, (_, fit)) in fits.iter().enumerate() {
        for (tr, &s) in fit.traces.iter().zip(&shifts_by_branch[b]) {
            per_curve[tr.curve].push(s);
        }
    }
    // Only near-critical curves can be missing here; chain() reports any
    // other gap. Such a curve sits between the branch tips and is excluded.
    let excluded: Vec<f64> = (0..curves.len())
        .filter(|&i| per_curve[i].is_empty())
        .map(|i| kicks[i])
        .collect();
    let xi: Vec<CurveScale> = per_curve
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .map(|(i, s)| {
            let ln = if i == gauge_curve {
                s[0]
            } else {
                s.iter().sum::<f64>() / s.len() as f64
            };
            CurveScale {
                kick: kicks[i],
                xi: ln.exp(),
                regime: regimes[i],
            }
        })
        .collect();
    if xi.is_empty() {
        return Err(Error::DegenerateBranch("all"));
    }

    let mut f_samples = Vec::new();
    let (mut ss, mut count) = (0.0, 0usize);
    for (b, (branch, fit)) in fits.iter().enumerate() {
        let shifts = &shifts_by_branch[b];
        let pool = Pool::new(&fit.traces, shifts, 1.0);
        for (i, (tr, &s)) in fit.traces.iter().zip(shifts).enumerate() {
            for k in 0..tr.x.len() {
                f_samples.push(ScaledPoint {
                    u: (tr.x[k] + s).exp(),
                    lambda: tr.v[k].exp(),
                    branch: *branch,
                    kick: kicks[tr.curve],
                    t: tr.t[k],
                });
                if let Some(r) = pool.reference(tr.x[k] + s, opts.bandwidth, i) {
                    ss += (tr.v[k] - r).powi(2);
                    count += 1;
                }
            }
        }
    }
    f_samples.sort_by(|a, b| {
        a.u.total_cmp(&b.u)
            .then(a.kick.total_cmp(&b.kick))
            .then(a.t.cmp(&b.t))
    });
    Ok(CollapseResult {
        xi,
        excluded,
        f_samples,
        residual_rms: if count > 0 {
            (ss / count as f64).sqrt()
        } else {
            0.0
        },
        residual_count: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::lambda::LambdaPoint;

    fn curve(kick: f64, xi: f64, g: impl Fn(f64) -> f64) -> ScalingCurve {
        ScalingCurve {
            kick,
            points: (30..=3000)
                .step_by(10)
                .map(|t| {
                    let u = xi * (t as f64).powf(-1.0 / 3.0);
                    LambdaPoint {
                        t,
                        lambda: g(u),
                        err: 0.0,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn single_curve_per_branch_is_gauge_only() {
        let loc = curve(4.0, 3.0, |u| u * u / (1.0 + u * u));
        let diff = curve(9.0, 0.5, |u| 1.0 + 1.0 / u);
        let res = collapse(
            &[loc.clone(), diff],
            &[Regime::Localized, Regime::Diffusive],
            4.0,
            &CollapseOptions::default(),
        )
        .unwrap();
        assert!(res.xi.iter().all(|c| (c.xi - 1.0).abs() < 1e-12));
        assert_eq!(res.residual_rms, 0.0);
        let loc_samples: Vec<_> = res.branch_samples(Branch::Localized).collect();
        assert_eq!(loc_samples.len(), loc.points.len());
        for p in loc_samples {
            let orig = loc.points.iter().find(|q| q.t == p.t).unwrap();
            assert!((p.lambda - orig.lambda).abs() < 1e-12 * orig.lambda);
            assert!((p.u - (p.t as f64).powf(-1.0 / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_sorted() {
        let g = |u: f64| u * u / (1.0 + u * u);
        let cs = vec![curve(4.0, 1.0, g), curve(4.5, 2.0, g), curve(5.0, 4.0, g)];
        let res = collapse(
            &cs,
            &[Regime::Localized; 3],
            4.0,
            &CollapseOptions::default(),
        )
        .unwrap();
        assert!(res.f_samples.windows(2).all(|w| w[0].u <= w[1].u));
        assert_eq!(res.xi_of(4.0), Some(1.0));
    }

    #[test]
    fn recovers_known_ratios() {
        let truth = [1.0, 1.6, 2.3, 3.9, 5.5, 8.0];
        let loc = |u: f64| u * u / (1.0 + 0.3 * u * u);
        let diff = |u: f64| 0.5 + 1.0 / u;
        let mut curves = Vec::new();
        let mut regimes = Vec::new();
        for (i, &xi) in truth.iter().enumerate() {
            curves.push(curve(4.0 + i as f64 * 0.1, xi, loc));
            regimes.push(Regime::Localized);
            curves.push(curve(9.0 - i as f64 * 0.1, xi, diff));
            regimes.push(Regime::Diffusive);
        }
        let res = collapse(&curves, &regimes, 4.0, &CollapseOptions::default()).unwrap();
        for (i, &xi) in truth.iter().enumerate() {
            let got = res.xi_of(4.0 + i as f64 * 0.1).unwrap();
            assert!((got / xi - 1.0).abs() < 0.02, "loc {i}: {got} vs {xi}");
        }
        // The diffusive branch is fixed only up to its own gauge.
        let base = res.xi_of(9.0).unwrap();
        for (i, &xi) in truth.iter().enumerate() {
            let got = res.xi_of(9.0 - i as f64 * 0.1).unwrap() / base;
            assert!((got / xi - 1.0).abs() < 0.02, "diff {i}: {got} vs {xi}");
        }
        assert!(res.residual_rms < 0.01, "{}", res.residual_rms);
    }

    #[test]
    fn disjoint_levels_have_no_overlap() {
        let cs = vec![
            curve(4.0, 1.0, |u| u * u),
            curve(4.5, 1.0, |u| 1e6 * u * u),
            curve(5.0, 1.0, |u| 1e12 * u * u),
        ];
        let err = collapse(
            &cs,
            &[Regime::Localized; 3],
            4.0,
            &CollapseOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoOverlap { .. }), "{err}");
    }

    #[test]
    fn isolated_critical_curve_is_excluded() {
        let loc = |u: f64| u * u / (1.0 + u * u);
        let diff = |u: f64| 1.0 + 1.0 / u;
        let cs = vec![
            curve(4.0, 1.0, loc),
            curve(5.0, 2.0, loc),
            curve(6.6, 1.0, |_| 1e3),
            curve(8.0, 2.0, diff),
            curve(9.0, 1.0, diff),
        ];
        let regimes = [
            Regime::Localized,
            Regime::Localized,
            Regime::Critical,
            Regime::Diffusive,
            Regime::Diffusive,
        ];
        let res = collapse(&cs, &regimes, 4.0, &CollapseOptions::default()).unwrap();
        assert_eq!(res.excluded, vec![6.6]);
        assert_eq!(res.xi.len(), 4);
        assert!(res.xi_of(6.6).is_none());
        assert!(res.f_samples.iter().all(|p| p.kick != 6.6));
        assert!((res.xi_of(5.0).unwrap() - 2.0).abs() < 0.04);
    }

    #[test]
    fn short_curves_rejected() {
        let mut c = curve(4.0, 1.0, |u| u);
        c.points.truncate(4);
        assert!(collapse(&[c], &[Regime::Localized], 4.0, &CollapseOptions::default()).is_err());
        assert!(matches!(
            collapse(&[], &[], 4.0, &CollapseOptions::default()),
            Err(Error::DegenerateBranch(_))
        ));
    }
}
