//! Contour integrals over circles in the complex plane.
//!
//! Integrals are approximated by the periodic trapezoid rule in the angle,
//! which converges geometrically for integrands analytic in an annulus
//! around the circle. The number of nodes doubles until two successive
//! estimates agree to the requested tolerance.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{CovTestError, Result};

/// Node count of the first trapezoid estimate.
pub const DEFAULT_NODES: usize = 2048;
/// Cap on node doublings.
pub const MAX_DOUBLINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::CounterClockwise => 1.0,
            Orientation::Clockwise => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    pub orientation: Orientation,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64, orientation: Orientation) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(CovTestError::Config(format!(
                "contour radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            center,
            radius,
            orientation,
        })
    }

    /// Node `k` of `nodes` and the matching `dm` weight (including 2π/nodes).
    fn node(&self, k: usize, nodes: usize) -> (Complex64, Complex64) {
        let theta = 2.0 * PI * k as f64 / nodes as f64;
        let unit = Complex64::from_polar(1.0, self.orientation.sign() * theta);
        let m = self.center + unit * self.radius;
        // dm = ± i r e^{±iθ} dθ
        let dm = Complex64::i()
            * unit
            * self.radius
            * self.orientation.sign()
            * (2.0 * PI / nodes as f64);
        (m, dm)
    }

    fn nodes(&self, nodes: usize) -> Vec<(Complex64, Complex64)> {
        (0..nodes).map(|k| self.node(k, nodes)).collect()
    }

    /// Distance from `point` to the circle itself.
    pub fn clearance(&self, point: Complex64) -> f64 {
        ((point - self.center).norm() - self.radius).abs()
    }

    pub fn encloses(&self, point: Complex64) -> bool {
        (point - self.center).norm() < self.radius
    }
}

/// `∮ f(m) dm` along `circle`.
pub fn integrate<F>(f: F, circle: &Circle, start_nodes: usize, tol: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let eval = |nodes: usize| -> Complex64 {
        circle
            .nodes(nodes)
            .into_iter()
            .map(|(m, dm)| f(m) * dm)
            .sum()
    };
    let mut nodes = start_nodes.max(8);
    let mut estimate = eval(nodes);
    let mut last_change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        nodes *= 2;
        let refined = eval(nodes);
        last_change = (refined - estimate).norm();
        estimate = refined;
        if last_change < tol {
            return Ok(estimate);
        }
    }
    Err(CovTestError::Quadrature {
        what: "circle trapezoid",
        last_change,
        levels: MAX_DOUBLINGS,
    })
}

/// A contour node, its weight, and the factor pairs evaluated there.
type SampledNode = (Complex64, Complex64, Vec<(Complex64, Complex64)>);
/// Several double integrals `∮∮ a_j(m₁) b_j(m₂) / (m₁ − m₂)² dm₁ dm₂` sharing
/// one pair of contours, evaluated in a single sweep over node pairs.
///
/// `factors(m)` returns the per-node values `(a_j(m), b_j(m))` for each term.
/// The contours must not intersect.
pub fn double_integrate_cauchy<F>(
    factors: F,
    inner: &Circle,
    outer: &Circle,
    terms: usize,
    start_nodes: usize,
    tol: f64,
) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Vec<(Complex64, Complex64)>,
{
    let gap = (inner.center - outer.center).norm();
    if gap + inner.radius > outer.radius - 1e-3 {
        return Err(CovTestError::Config(format!(
            "inner contour (radius {}) must lie strictly inside the outer one (radius {}) with a 1e-3 margin",
            inner.radius, outer.radius
        )));
    }
    let eval = |nodes: usize| -> Vec<Complex64> {
        let side = |c: &Circle| -> Vec<SampledNode> {
            c.nodes(nodes)
                .into_iter()
                .map(|(m, dm)| (m, dm, factors(m)))
                .collect()
        };
        let first = side(inner);
        let second = side(outer);
        let mut acc = vec![Complex64::new(0.0, 0.0); terms];
        for (m1, dm1, f1) in &first {
            for (m2, dm2, f2) in &second {
                let d = m1 - m2;
                let kernel = dm1 * dm2 / (d * d);
                for (j, slot) in acc.iter_mut().enumerate() {
                    *slot += f1[j].0 * f2[j].1 * kernel;
                }
            }
        }
        acc
    };
    let mut nodes = start_nodes.max(8);
    let mut estimate = eval(nodes);
    let mut last_change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        nodes *= 2;
        let refined = eval(nodes);
        last_change = refined
            .iter()
            .zip(&estimate)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        estimate = refined;
        if last_change < tol {
            return Ok(estimate);
        }
    }
    Err(CovTestError::Quadrature {
        what: "double circle trapezoid",
        last_change,
        levels: MAX_DOUBLINGS,
    })
}
