//! Finite-size scaling of the kicked-rotor dynamics.
//!
//! With `Λ(t) = Π₀⁻²(t) t^{-2/3}`, the one-parameter scaling hypothesis
//! states `Λ = f(ξ t^{-1/3})` with a scaling parameter ξ that depends only
//! on the kick strength K. The collapse reconstructs f and ξ(K) without
//! assuming a form for f; [`critical`] then fits
//! `1/ξ = α |K - K_c|^ν + β` to locate the transition.

pub mod collapse;
pub mod critical;
pub mod global;
pub mod growth;
pub mod lambda;

pub use collapse::{collapse, Branch, CollapseOptions, CollapseResult, CurveScale, ScaledPoint};
pub use critical::{fit_critical, CriticalFit, CriticalFitOptions, CriticalParams};
pub use global::{global_fit, GlobalFit};
pub use growth::{classify_regime, fit_growth_exponent, GrowthExponent, Regime, DEFAULT_DELTA};
pub use lambda::{lambda_series, log_binned, LambdaPoint, ScalingCurve, DEFAULT_WINDOW_START};
