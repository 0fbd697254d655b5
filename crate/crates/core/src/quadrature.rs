//! One-dimensional quadrature rules.
//!
//! [`trapezoid_refine`] is the workhorse for integrands that are smooth and
//! periodic (or have vanishing odd derivatives at both ends) after an angle
//! substitution; the composite trapezoid rule converges geometrically there.
//! [`adaptive_simpson`] is a general-purpose rule used as an independent check.

use crate::error::{CovTestError, Result};

/// Default absolute tolerance for refinement loops.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Maximum number of interval halvings in [`trapezoid_refine`].
pub const MAX_HALVINGS: usize = 22;

const INITIAL_INTERVALS: usize = 8;
const MIN_HALVINGS: usize = 3;

/// Composite trapezoid rule on `[lo, hi]`, halving the step until two
/// successive estimates differ by less than `tol`.
pub fn trapezoid_refine<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let width = hi - lo;
    let mut intervals = INITIAL_INTERVALS;
    let mut h = width / intervals as f64;
    let mut sum = 0.5 * (f(lo) + f(hi)) + (1..intervals).map(|i| f(lo + i as f64 * h)).sum::<f64>();
    let mut estimate = sum * h;
    let mut last_change = f64::INFINITY;
    for level in 1..=MAX_HALVINGS {
        // Only the new midpoints are evaluated at each level.
        let mids: f64 = (0..intervals).map(|i| f(lo + (i as f64 + 0.5) * h)).sum();
        sum += mids;
        intervals *= 2;
        h = width / intervals as f64;
        let refined = sum * h;
        last_change = (refined - estimate).abs();
        estimate = refined;
        if !estimate.is_finite() {
            break;
        }
        if level >= MIN_HALVINGS && last_change < tol {
            return Ok(estimate);
        }
    }
    Err(CovTestError::Quadrature {
        what: "composite trapezoid",
        last_change,
        levels: MAX_HALVINGS,
    })
}

/// Largest number of integrand evaluations [`adaptive_simpson`] may spend.
pub const SIMPSON_BUDGET: usize = 4_000_000;

/// Adaptive Simpson quadrature with Richardson correction.
///
/// A panel is accepted once its error estimate meets its share of `tol` or
/// falls to roundoff level relative to the panel value.
pub fn adaptive_simpson<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    let fhi = f(hi);
    let mid = 0.5 * (lo + hi);
    let fmid = f(mid);
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    let mut state = SimpsonState {
        failed: false,
        evaluations: 3,
    };
    let value = simpson_step(&f, lo, hi, flo, fmid, fhi, whole, tol, 50, &mut state);
    if state.failed || !value.is_finite() {
        return Err(CovTestError::Quadrature {
            what: "adaptive Simpson",
            last_change: f64::NAN,
            levels: 50,
        });
    }
    Ok(value)
}

struct SimpsonState {
    failed: bool,
    evaluations: usize,
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    state: &mut SimpsonState,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let mid = 0.5 * (lo + hi);
    let lm = 0.5 * (lo + mid);
    let rm = 0.5 * (mid + hi);
    let flm = f(lm);
    let frm = f(rm);
    state.evaluations += 2;
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    let delta = left + right - whole;
    if depth == 0 || state.evaluations > SIMPSON_BUDGET {
        state.failed = true;
        return left + right;
    }
    let floor = 64.0 * f64::EPSILON * (left + right).abs();
    if delta.abs() <= (15.0 * tol).max(floor) {
        return left + right + delta / 15.0;
    }
    simpson_step(
        f,
        lo,
        mid,
        flo,
        flm,
        fmid,
        left,
        0.5 * tol,
        depth - 1,
        state,
    ) + simpson_step(
        f,
        mid,
        hi,
        fmid,
        frm,
        fhi,
        right,
        0.5 * tol,
        depth - 1,
        state,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trapezoid_periodic_is_fast_and_exact() {
        let v = trapezoid_refine(|t: f64| 1.0 / (2.0 + t.cos()), 0.0, 2.0 * PI, 1e-13).unwrap();
        assert!((v - 2.0 * PI / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn simpson_polynomial_and_smooth() {
        let v = adaptive_simpson(|x| x * x * x - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let e = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((e - (1f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn non_convergence_is_reported() {
        // A discontinuous integrand with a tolerance that cannot be met.
        let r = trapezoid_refine(|x| if x < 0.1234567 { 0.0 } else { 1.0 }, 0.0, 1.0, 1e-30);
        assert!(matches!(r, Err(CovTestError::Quadrature { .. })));
    }

    #[test]
    fn simpson_handles_sharp_peaks() {
        // Peak height ~700 at t = π; closed form -2π/√(d² − 1).
        let d = -1.001;
        let v = adaptive_simpson(|t: f64| 1.0 / (t.cos() + d), 0.0, 2.0 * PI, 1e-12).unwrap();
        let exact = -2.0 * PI / (d * d - 1.0f64).sqrt();
        assert!(((v - exact) / exact).abs() < 1e-12, "{v} vs {exact}");
        // A far sharper peak at an unreachable tolerance must still return.
        let d = -1.0 - 1e-7;
        let _ = adaptive_simpson(|t: f64| 1.0 / (t.cos() + d), 0.0, 2.0 * PI, 1e-14);
    }

    #[test]
    fn simpson_reports_exhausted_budget() {
        let r = adaptive_simpson(|x: f64| (1.0 / x).sin(), 1e-12, 1.0, 1e-15);
        assert!(matches!(r, Err(CovTestError::Quadrature { .. })));
    }
}
