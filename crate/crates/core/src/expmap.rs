//! Closed-form sub-Riemannian exponential map of a contact Carnot group.
//!
//! On block `j` the horizontal endpoint is `x_j = I(λ α_j) u_j` with
//! `I(y) = (sin y / y) Id + ((cos y − 1) / y) J`, and the vertical endpoint is
//! `z = Σ_j (λα_j − sin λα_j) / (2 λ² α_j) ‖u_j‖²`. Every matrix involved is of
//! the form `a Id + b J`, so it is carried around as a [`RotCoeffs`] pair.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{apply_j_scaled, BlockVec, Covector, GroupSpec, Point};

/// Relative distance to `2πℤ \ {0}` below which an argument counts as a pole.
pub const POLE_TOL: f64 = 1e-8;

/// Below this magnitude `g`, `g'`, `I` and `I⁻¹` switch to their Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// The nonzero integer `m` with `y ≈ 2πm`, if `y` lies within the pole tolerance.
pub fn pole_index(y: f64) -> Option<i64> {
    let m = (y / TAU).round();
    if m != 0.0 && (y - TAU * m).abs() < POLE_TOL * y.abs().max(1.0) {
        Some(m as i64)
    } else {
        None
    }
}

pub fn is_pole(y: f64) -> bool {
    pole_index(y).is_some()
}

/// `y − sin y` without cancellation for small `|y|`.
pub fn y_minus_sin(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        return y - y.sin();
    }
    // y³/3! − y⁵/5! + y⁷/7! − …
    let y2 = y * y;
    let mut term = y * y2 / 6.0;
    let mut sum = term;
    let mut k = 3.0;
    while term.abs() > f64::EPSILON * sum.abs() * 0.01 {
        term *= -y2 / ((k + 1.0) * (k + 2.0));
        sum += term;
        k += 2.0;
    }
    sum
}

/// The matrix `a Id + b J` acting on one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotCoeffs {
    pub a: f64,
    pub b: f64,
}

impl RotCoeffs {
    pub const IDENTITY: RotCoeffs = RotCoeffs { a: 1.0, b: 0.0 };

    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Matrix product; `J² = −Id` gives `(a, b)∘(c, d) = (ac − bd, ad + bc)`.
    pub fn compose(self, other: RotCoeffs) -> RotCoeffs {
        RotCoeffs { a: self.a * other.a - self.b * other.b, b: self.a * other.b + self.b * other.a }
    }

    pub fn apply(self, v: &[f64]) -> Vec<f64> {
        let mut jv = vec![0.0; v.len()];
        apply_j_scaled(1.0, v, &mut jv);
        v.iter().zip(&jv).map(|(x, y)| self.a * x + self.b * y).collect()
    }

    /// Operator norm squared; `a Id + b J` is conformal.
    pub fn norm_sq(self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

/// A value of `g`, or the marker for one of its double poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GValue {
    Finite(f64),
    Pole,
}

impl GValue {
    pub fn value(self) -> Option<f64> {
        match self {
            GValue::Finite(v) => Some(v),
            GValue::Pole => None,
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, GValue::Pole)
    }
}

/// `g(λ) = (λ − sin λ) / (8 sin²(λ/2))`, with `g(0) = 0`.
pub fn g(lambda: f64) -> GValue {
    if is_pole(lambda) {
        return GValue::Pole;
    }
    let y = lambda.abs();
    let v = if y < SERIES_CUTOFF {
        y / 12.0 + y * y * y / 360.0
    } else {
        let s = (0.5 * y).sin();
        y_minus_sin(y) / (8.0 * s * s)
    };
    GValue::Finite(v.copysign(lambda))
}

/// Closed-form `g'(λ) = 1/4 − (λ − sin λ) cos(λ/2) / (8 sin³(λ/2))`.
pub fn g_prime(lambda: f64) -> Result<f64> {
    if is_pole(lambda) {
        return Err(Error::PoleError(lambda));
    }
    let y = lambda.abs();
    if y < SERIES_CUTOFF {
        return Ok(1.0 / 12.0 + y * y / 120.0);
    }
    let (s, c) = (0.5 * y).sin_cos();
    Ok(0.25 - y_minus_sin(y) * c / (8.0 * s * s * s))
}

/// Coefficients of `I(y) = (sin y / y) Id + ((cos y − 1) / y) J`.
pub fn i_coeffs(y: f64) -> RotCoeffs {
    if y == 0.0 {
        return RotCoeffs::IDENTITY;
    }
    if y.abs() < SERIES_CUTOFF {
        let y2 = y * y;
        return RotCoeffs::new(1.0 - y2 / 6.0, -0.5 * y + y * y2 / 24.0);
    }
    let s = (0.5 * y).sin();
    RotCoeffs::new(y.sin() / y, -2.0 * s * s / y)
}

/// Coefficients of `I(y)⁻¹ = (y/2) cot(y/2) Id + (y/2) J`.
pub fn i_inverse_coeffs(y: f64) -> Result<RotCoeffs> {
    if is_pole(y) {
        return Err(Error::SingularI(y));
    }
    if y == 0.0 {
        return Ok(RotCoeffs::IDENTITY);
    }
    let h = 0.5 * y;
    if y.abs() < SERIES_CUTOFF {
        return Ok(RotCoeffs::new(1.0 - y * y / 12.0, h));
    }
    let (s, c) = h.sin_cos();
    Ok(RotCoeffs::new(h * c / s, h))
}

/// `α (y − sin y) / (2 y²)` with `y = λα`: the weight of `‖u_j‖²` in `z`.
fn vertical_weight(alpha: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    alpha * y_minus_sin(y) / (2.0 * y * y)
}

/// The exponential map `(u, λ) ↦ (x, z)`.
pub fn exp_map(spec: &GroupSpec, cov: &Covector) -> Result<Point> {
    cov.u.check_layout(spec)?;
    let mut x = BlockVec::zeros(spec);
    let mut z = 0.0;
    for j in 0..spec.k() {
        let y = cov.lambda * spec.alpha(j);
        let uj = cov.u.block(j);
        let xj = i_coeffs(y).apply(uj);
        x.block_mut(j).copy_from_slice(&xj);
        z += vertical_weight(spec.alpha(j), y) * cov.u.block_norm_sq(j);
    }
    Ok(Point { x, z })
}

/// The geodesic of `cov` at time `t ∈ [0, 1]`, i.e. the endpoint of `(t u, t λ)`.
pub fn geodesic_point(spec: &GroupSpec, cov: &Covector, t: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::BadParameter(format!("time {t} outside [0, 1]")));
    }
    exp_map(spec, &cov.scaled(t))
}

/// Samples `γ(t_i)` at `samples` equally spaced times in `[0, 1]`.
pub fn sample_geodesic(spec: &GroupSpec, cov: &Covector, samples: usize) -> Result<Vec<Point>> {
    if samples < 2 {
        return Err(Error::BadParameter("need at least two samples".into()));
    }
    (0..samples).map(|i| geodesic_point(spec, cov, i as f64 / (samples - 1) as f64)).collect()
}

/// Energy `‖u‖² / 2` of the geodesic with initial covector `cov`.
pub fn energy(cov: &Covector) -> f64 {
    0.5 * cov.u.norm_sq()
}

/// First positive minimiser of `g` on `(2π, 4π)`, i.e. the first positive root of `tan(λ/2) = λ/2`.
pub const MU_1: f64 = 8.986_818_915_818_13;
