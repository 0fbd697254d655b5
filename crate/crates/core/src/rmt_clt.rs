//! Mean and variance of the limiting Gaussian law of the linear spectral
//! statistic `Σ (λᵢ − 1)²` of a sample covariance matrix.
//!
//! The closed forms are
//!
//! * `μ(g) = (κ − 1) q + β q`
//! * `υ(g) = 2κ q² (1 + 2q) + 4β q³`
//!
//! and each has an independent numerical route: the `μ` term from a
//! real-line integral plus a contour integral in the companion Stieltjes
//! transform plane, the `υ` term from nested double contour integrals.
//!
//! In the `m`-plane the integrands are rational with poles at `m = 0` and
//! `m = −1` only. The image of a positively oriented contour around the MP
//! support encloses `−1` counter-clockwise when `q ≤ 1`, and encloses `0`
//! clockwise when `q > 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::contour::{self, Circle, Orientation};
use crate::error::{CovTestError, Result};
use crate::mp_law::MpIndex;
use crate::quadrature::trapezoid_refine;

/// Real (κ = 2) or complex (κ = 1) observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Kappa {
    Complex,
    Real,
}

impl Kappa {
    pub fn value(self) -> f64 {
        match self {
            Kappa::Complex => 1.0,
            Kappa::Real => 2.0,
        }
    }

    pub fn from_int(k: i64) -> Result<Self> {
        match k {
            1 => Ok(Kappa::Complex),
            2 => Ok(Kappa::Real),
            other => Err(CovTestError::InvalidInput(format!(
                "kappa must be 1 (complex) or 2 (real), got {other}"
            ))),
        }
    }
}

/// `(q, κ, β)`: dimension ratio, real/complex indicator, fourth-moment parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmtParams {
    q: MpIndex,
    kappa: Kappa,
    beta: f64,
}

impl RmtParams {
    /// `β` must satisfy `β ≥ −κ`, since `E|ξ|⁴ ≥ (E|ξ|²)²`.
    pub fn new(q: MpIndex, kappa: Kappa, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < -kappa.value() {
            return Err(CovTestError::InvalidInput(format!(
                "beta = {beta} violates beta >= -kappa = {}",
                -kappa.value()
            )));
        }
        Ok(Self { q, kappa, beta })
    }

    pub fn q(&self) -> f64 {
        self.q.value()
    }

    pub fn kappa(&self) -> Kappa {
        self.kappa
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

pub fn mean_correction(params: &RmtParams) -> f64 {
    let q = params.q();
    (params.kappa.value() - 1.0) * q + params.beta * q
}

pub fn var_correction(params: &RmtParams) -> f64 {
    let q = params.q();
    let k = params.kappa.value();
    2.0 * k * q * q * (1.0 + 2.0 * q) + 4.0 * params.beta * q.powi(3)
}

/// `z = −1/m + q/(1 + m)`, the inverse of the companion Stieltjes transform
/// of the MP law. `q = 0` is allowed here.
pub fn stieltjes_z_of_m(m: Complex64, q: f64) -> Result<Complex64> {
    if m.norm() == 0.0 || (m + 1.0).norm() == 0.0 {
        return Err(CovTestError::Domain(format!("z(m) has a pole at m = {m}")));
    }
    Ok(z_of_m(m, q))
}

fn z_of_m(m: Complex64, q: f64) -> Complex64 {
    -1.0 / m + q / (1.0 + m)
}

/// Contour settings for the numerical routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourConfig {
    /// Radius of the single contour used for `μ₂` and `υ₂`.
    pub radius: f64,
    /// Radius of the `m₁` contour in the double integrals.
    pub inner_radius: f64,
    /// Radius of the `m₂` contour in the double integrals.
    pub outer_radius: f64,
    /// Initial trapezoid node count for single contours.
    pub nodes: usize,
    /// Initial node count per contour for the double integrals.
    pub double_nodes: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            radius: 0.5,
            inner_radius: 0.4,
            outer_radius: 0.6,
            nodes: contour::DEFAULT_NODES,
            double_nodes: 256,
        }
    }
}

/// Pole enclosed by the `m`-plane contour and the contour's orientation.
fn enclosed_pole(q: f64) -> (Complex64, Complex64, Orientation) {
    let zero = Complex64::new(0.0, 0.0);
    let minus_one = Complex64::new(-1.0, 0.0);
    if q <= 1.0 {
        (minus_one, zero, Orientation::CounterClockwise)
    } else {
        (zero, minus_one, Orientation::Clockwise)
    }
}

fn pole_circle(q: f64, radius: f64) -> Result<Circle> {
    let (center, excluded, orientation) = enclosed_pole(q);
    let circle = Circle::new(center, radius, orientation)?;
    if circle.encloses(excluded) || circle.clearance(excluded) < 0.3 * radius {
        return Err(CovTestError::Config(format!(
            "contour of radius {radius} around {center} does not keep the pole at {excluded} \
             outside by a 0.3-radius margin"
        )));
    }
    Ok(circle)
}

/// `g(z(m)) = (z(m) − 1)²`.
fn g_of_m(m: Complex64, q: f64) -> Complex64 {
    let d = z_of_m(m, q) - 1.0;
    d * d
}

/// Real-line part `μ₁ = (κ − 1)[(g(a) + g(b))/4 − (1/2π)∫ g(x)/√(4q − (x − 1 − q)²) dx]`
/// after `x = 1 + q − 2√q cos θ`.
pub fn mu1_numeric(params: &RmtParams, tol: f64) -> Result<f64> {
    let q = params.q();
    let (a, b) = params.q.edges();
    let g = |x: f64| (x - 1.0) * (x - 1.0);
    let sq = q.sqrt();
    let integral = trapezoid_refine(|t: f64| g(1.0 + q - 2.0 * sq * t.cos()), 0.0, PI, tol)?;
    Ok((params.kappa.value() - 1.0) * ((g(a) + g(b)) / 4.0 - integral / (2.0 * PI)))
}

/// Contour part `μ₂ = −(βq/2πi) ∮ g(z) m³ / ((1 + m)[(1 − q)m² + 2m + 1]) dz`,
/// evaluated in the `m`-plane with `dz = [(1 − q)m² + 2m + 1]/(m²(1 + m)²) dm`.
pub fn mu2_numeric(params: &RmtParams, radius: f64, nodes: usize, tol: f64) -> Result<f64> {
    let q = params.q();
    let circle = pole_circle(q, radius)?;
    // The factor (1 − q)m² + 2m + 1 cancels against dz/dm.
    let integrand = |m: Complex64| g_of_m(m, q) * m / ((1.0 + m) * (1.0 + m) * (1.0 + m));
    let integral = contour::integrate(integrand, &circle, nodes, tol)?;
    let value = -params.beta * q / (2.0 * PI * Complex64::i()) * integral;
    Ok(value.re)
}

pub fn mean_correction_numeric(params: &RmtParams, tol: f64) -> Result<f64> {
    mean_correction_numeric_with(params, tol, &ContourConfig::default())
}

pub fn mean_correction_numeric_with(
    params: &RmtParams,
    tol: f64,
    config: &ContourConfig,
) -> Result<f64> {
    params.q.ensure_not_unity()?;
    Ok(mu1_numeric(params, tol)? + mu2_numeric(params, config.radius, config.nodes, tol)?)
}

/// Covariance components `υ(z₁^a, z₂^b) = −(κ/4π²) ∮∮ z₁^a z₂^b / (m₁ − m₂)² dm₁ dm₂`
/// for each requested exponent pair, computed in one sweep.
pub fn var_components_numeric(
    params: &RmtParams,
    exponents: &[(i32, i32)],
    config: &ContourConfig,
    tol: f64,
) -> Result<Vec<f64>> {
    let q = params.q();
    if config.inner_radius >= config.outer_radius - 1e-3 {
        return Err(CovTestError::Config(format!(
            "inner contour radius {} must be below the outer radius {} by more than 1e-3",
            config.inner_radius, config.outer_radius
        )));
    }
    let inner = pole_circle(q, config.inner_radius)?;
    let outer = pole_circle(q, config.outer_radius)?;
    let exps = exponents.to_vec();
    let factors = move |m: Complex64| {
        let z = z_of_m(m, q);
        exps.iter().map(|&(a, b)| (z.powi(a), z.powi(b))).collect()
    };
    let scale = -params.kappa.value() / (4.0 * PI * PI);
    // The double integral carries a 1/(4π²) factor; tolerate its scale.
    let raw = contour::double_integrate_cauchy(
        factors,
        &inner,
        &outer,
        exponents.len(),
        config.double_nodes,
        tol / scale.abs(),
    )?;
    Ok(raw.into_iter().map(|v| (v * scale).re).collect())
}

/// `υ₁ = υ(z₁², z₂²) − 2υ(z₁², z₂) − 2υ(z₁, z₂²) + 4υ(z₁, z₂)`.
pub fn upsilon1_numeric(params: &RmtParams, config: &ContourConfig, tol: f64) -> Result<f64> {
    let c = var_components_numeric(params, &[(2, 2), (2, 1), (1, 2), (1, 1)], config, tol)?;
    Ok(c[0] - 2.0 * c[1] - 2.0 * c[2] + 4.0 * c[3])
}

/// `υ₂ = −(βq/4π²) (∮ g(z)/(1 + m)² dm)²`.
pub fn upsilon2_numeric(params: &RmtParams, config: &ContourConfig, tol: f64) -> Result<f64> {
    if params.beta == 0.0 {
        return Ok(0.0);
    }
    let q = params.q();
    let circle = pole_circle(q, config.radius)?;
    let single = contour::integrate(
        |m| g_of_m(m, q) / ((1.0 + m) * (1.0 + m)),
        &circle,
        config.nodes,
        tol,
    )?;
    Ok((-params.beta * q / (4.0 * PI * PI) * single * single).re)
}

pub fn var_correction_numeric(params: &RmtParams, tol: f64) -> Result<f64> {
    var_correction_numeric_with(params, tol, &ContourConfig::default())
}

pub fn var_correction_numeric_with(
    params: &RmtParams,
    tol: f64,
    config: &ContourConfig,
) -> Result<f64> {
    params.q.ensure_not_unity()?;
    Ok(upsilon1_numeric(params, config, tol)? + upsilon2_numeric(params, config, tol)?)
}
