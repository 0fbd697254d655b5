//! Marčenko–Pastur law: density, point mass, the closed-form integral of
//! `g(x) = (x − 1)²`, and a quadrature route for arbitrary integrands.

use std::f64::consts::PI;

use crate::error::{CovTestError, Result};
use crate::quadrature::trapezoid_refine;

/// Closed-form paths refuse ratios with `|q − 1|` at or below this value.
pub const UNITY_TOL: f64 = 1e-8;

/// Dimension-to-sample ratio indexing the MP law.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MpIndex(f64);

impl MpIndex {
    pub fn new(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(CovTestError::InvalidInput(format!(
                "MP index must be a positive finite number, got {q}"
            )));
        }
        Ok(Self(q))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Support edges `(a, b) = ((1 − √q)², (1 + √q)²)`.
    pub fn edges(self) -> (f64, f64) {
        let s = self.0.sqrt();
        ((1.0 - s).powi(2), (1.0 + s).powi(2))
    }

    /// Fails with [`CovTestError::RatioAtUnity`] when `q` is within [`UNITY_TOL`] of 1.
    pub fn ensure_not_unity(self) -> Result<Self> {
        if (self.0 - 1.0).abs() <= UNITY_TOL {
            Err(CovTestError::RatioAtUnity { q: self.0 })
        } else {
            Ok(self)
        }
    }
}

/// Density of the continuous part: `√((b − x)(x − a)) / (2π x q)` on `[a, b]`.
pub fn mp_density(x: f64, q: MpIndex) -> f64 {
    let (a, b) = q.edges();
    if x < a || x > b || x <= 0.0 {
        return 0.0;
    }
    ((b - x) * (x - a)).max(0.0).sqrt() / (2.0 * PI * x * q.value())
}

/// Mass `max(0, 1 − 1/q)` sitting at the origin.
pub fn mp_point_mass(q: MpIndex) -> f64 {
    (1.0 - 1.0 / q.value()).max(0.0)
}

/// `∫ (x − 1)² dF^q(x) = q`, point mass included.
pub fn mp_integral_g(q: MpIndex) -> Result<f64> {
    Ok(q.ensure_not_unity()?.value())
}

/// `∫ f dF^q` by the substitution `x = 1 + q − 2√q cos θ`, θ ∈ [0, π].
///
/// The substitution turns `p(x) dx` into `(2/π) sin²θ / x dθ`, which has no
/// edge singularity. For `q > 1` the point mass contributes `f(0)(1 − 1/q)`.
pub fn mp_integral_numeric<F>(f: F, q: MpIndex, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let qv = q.value();
    let sq = qv.sqrt();
    let a = (1.0 - sq).powi(2);
    let integrand = |theta: f64| {
        let half = (0.5 * theta).sin();
        // Same as 1 + q − 2√q cos θ, without cancellation near the lower edge.
        let x = a + 4.0 * sq * half * half;
        let weight = if x > 0.0 {
            theta.sin().powi(2) / x
        } else {
            // q = 1, θ = 0: sin²θ / x → cos²(θ/2).
            (0.5 * theta).cos().powi(2)
        };
        2.0 / PI * weight * f(x)
    };
    let continuous = trapezoid_refine(integrand, 0.0, PI, tol)?;
    Ok(continuous + f(0.0) * mp_point_mass(q))
}

/// `∫₀^{2π} dθ / (cos θ + d₀)` for `|d₀| > 1`.
///
/// Equals `−2π/√(d₀² − 1)` for `d₀ < −1` (and `+2π/√(d₀² − 1)` for `d₀ > 1`).
pub fn helper_integral_cos(d0: f64) -> Result<f64> {
    if !d0.is_finite() || d0.abs() <= 1.0 {
        return Err(CovTestError::Domain(format!(
            "1/(cos θ + d0) has a pole on [0, 2π] for d0 = {d0}"
        )));
    }
    Ok(d0.signum() * 2.0 * PI / (d0 * d0 - 1.0).sqrt())
}

/// The constant `d₀ = −(1 + q)/(2√q)` from writing `x = −2√q (cos θ + d₀)`.
pub fn cos_offset(q: MpIndex) -> f64 {
    -(1.0 + q.value()) / (2.0 * q.value().sqrt())
}
