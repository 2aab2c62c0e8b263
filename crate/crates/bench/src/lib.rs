//! Benchmark fixtures shared by the criterion benches.

use qkr_core::scaling::{LambdaPoint, Regime, ScalingCurve};

/// A two-branch family `Λ_K(t) = f(ξ_K t^{-1/3})` with `n` curves per branch.
pub fn synthetic_family(n: usize) -> (Vec<ScalingCurve>, Vec<Regime>) {
    let loc = |u: f64| u * u / (1.0 + 0.3 * u * u);
    let diff = |u: f64| 0.5 + 1.0 / u;
    let mut curves = Vec::new();
    let mut regimes = Vec::new();
    for i in 0..n {
        let xi = 1.3f64.powi(i as i32);
        for (kick, f, regime) in [
            (
                4.0 + 0.1 * i as f64,
                &loc as &dyn Fn(f64) -> f64,
                Regime::Localized,
            ),
            (9.0 - 0.1 * i as f64, &diff, Regime::Diffusive),
        ] {
            let points = (30..=3000u32)
                .step_by(7)
                .map(|t| LambdaPoint {
                    t,
                    lambda: f(xi * (t as f64).powf(-1.0 / 3.0)),
                    err: 0.0,
                })
                .collect();
            curves.push(ScalingCurve { kick, points });
            regimes.push(regime);
        }
    }
    (curves, regimes)
}
