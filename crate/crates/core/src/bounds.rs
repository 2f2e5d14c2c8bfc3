//! Explicit linear bounds on the counting functions.
//!
//! With `r = |z| / ‖x‖²`, the number of geodesics satisfies
//! `C₁ r + R₁ ≤ ν̂(p) ≤ C₂ r + R₂` when every block of `x` is nonzero, and the
//! total Betti number of the fiber satisfies `C₁' r + R₁' ≤ β̂(p) ≤ C₂ r + R₂`
//! whenever `x ≠ 0`.

use std::f64::consts::PI;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fiber::{fiber_with, Count, FiberOptions};
use crate::model::{GroupSpec, Point};

/// Ratios `α_j / α₁` within this distance of an integer are snapped before flooring.
pub const FLOOR_SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub delta_m: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
}

/// Outcome of one inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    NotApplicable,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Holds
        } else {
            Verdict::Violated
        }
    }

    pub fn is_violated(self) -> bool {
        self == Verdict::Violated
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Verdict::Holds => s.serialize_bool(true),
            Verdict::Violated => s.serialize_bool(false),
            Verdict::NotApplicable => s.serialize_str("not-applicable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "C1_top")]
    pub c1_top: Option<f64>,
    #[serde(rename = "R1_top")]
    pub r1_top: Option<f64>,
    #[serde(rename = "C2_top")]
    pub c2_top: f64,
    #[serde(rename = "R2_top")]
    pub r2_top: f64,
    #[serde(rename = "delta_M")]
    pub delta_m: f64,
    pub delta_prime: Option<f64>,
    /// `|z| / ‖x‖²`; `null` in JSON when `x = 0`.
    pub ratio: f64,
    pub nu_hat: Count,
    pub beta_hat: Count,
    pub lower_ok: Verdict,
    pub upper_ok: Verdict,
    pub lower_top_ok: Verdict,
    pub upper_top_ok: Verdict,
    pub uniqueness_threshold: Option<f64>,
}

impl BoundsReport {
    /// True when no applicable inequality is violated.
    pub fn all_hold(&self) -> bool {
        ![self.lower_ok, self.upper_ok, self.lower_top_ok, self.upper_top_ok].iter().any(|v| v.is_violated())
    }
}

fn snapped_floor(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < FLOOR_SNAP_TOL {
        r
    } else {
        v.floor()
    }
}

/// `(Σ_{j∈blocks} (α₁/α_j) ⌊α_j/α₁⌋)⁻¹`.
fn delta_over(spec: &GroupSpec, blocks: impl Iterator<Item = usize>) -> f64 {
    let a1 = spec.alpha_min();
    let s: f64 = blocks.map(|j| a1 / spec.alpha(j) * snapped_floor(spec.alpha(j) / a1)).sum();
    1.0 / s
}

fn c_lower(spec: &GroupSpec, delta: f64) -> f64 {
    let s = (0.5 * delta * PI).sin();
    8.0 / PI * spec.alpha_min() / spec.alpha_max().powi(2) * s * s
}

/// `R(δ) = 4(1 − k)/k + (α₁/α_k)(δπ − sin δπ − 2π)/π − 1`.
fn r_lower(spec: &GroupSpec, delta: f64) -> f64 {
    let k = spec.k() as f64;
    let dp = delta * PI;
    4.0 * (1.0 - k) / k + spec.alpha_min() / spec.alpha_max() * (dp - dp.sin() - 2.0 * PI) / PI - 1.0
}

pub fn constants(spec: &GroupSpec) -> Constants {
    let delta_m = delta_over(spec, 0..spec.k());
    let (a1, ak, k) = (spec.alpha_min(), spec.alpha_max(), spec.k() as f64);
    Constants {
        delta_m,
        c1: c_lower(spec, delta_m),
        r1: r_lower(spec, delta_m),
        c2: 8.0 * k / PI * ak / (a1 * a1),
        r2: k * ak * ak / (a1 * a1),
    }
}

/// `(C₁', δ')` for the vanishing set `i0`; `δ'` sums over the nonzero blocks only.
pub fn topo_constants(spec: &GroupSpec, i0: &[usize]) -> Result<(f64, f64)> {
    if (0..spec.k()).all(|j| i0.contains(&j)) {
        return Err(Error::AllBlocksZero);
    }
    let delta = delta_over(spec, (0..spec.k()).filter(|j| !i0.contains(j)));
    Ok((c_lower(spec, delta), delta))
}

/// `R₁'`, taken as the lower-bound remainder evaluated at `δ'`.
pub fn topo_remainder(spec: &GroupSpec, delta_prime: f64) -> f64 {
    r_lower(spec, delta_prime)
}

/// `(π/8)(2α₁²/α_k − α_k)` when positive: below this ratio there is a single geodesic.
pub fn uniqueness_threshold(spec: &GroupSpec) -> Option<f64> {
    let (a1, ak) = (spec.alpha_min(), spec.alpha_max());
    let t = PI / 8.0 * (2.0 * a1 * a1 / ak - ak);
    (t > 0.0).then_some(t)
}

pub fn check_bounds(spec: &GroupSpec, p: &Point) -> Result<BoundsReport> {
    check_bounds_with(spec, p, &FiberOptions::default())
}

/// Evaluates every applicable inequality at `p` against the computed fiber.
pub fn check_bounds_with(spec: &GroupSpec, p: &Point, opts: &FiberOptions) -> Result<BoundsReport> {
    let res = fiber_with(spec, p, opts)?;
    let c = constants(spec);
    let i0 = crate::fiber::index_i0(spec, p, opts.zero_tol);
    let ratio = p.ratio();
    let top = topo_constants(spec, &i0).ok();
    let (c1_top, delta_prime) = match top {
        Some((c1t, d)) => (Some(c1t), Some(d)),
        None => (None, None),
    };
    let r1_top = delta_prime.map(|d| topo_remainder(spec, d));

    let (lower_ok, upper_ok) = match (i0.is_empty(), res.nu_hat) {
        (true, Count::Finite(nu)) => {
            let nu = nu as f64;
            (Verdict::from_bool(c.c1 * ratio + c.r1 <= nu), Verdict::from_bool(nu <= c.c2 * ratio + c.r2))
        }
        _ => (Verdict::NotApplicable, Verdict::NotApplicable),
    };
    let (lower_top_ok, upper_top_ok) = match (c1_top, r1_top, res.beta_hat) {
        (Some(c1t), Some(r1t), Count::Finite(beta)) => {
            let beta = beta as f64;
            (Verdict::from_bool(c1t * ratio + r1t <= beta), Verdict::from_bool(beta <= c.c2 * ratio + c.r2))
        }
        _ => (Verdict::NotApplicable, Verdict::NotApplicable),
    };
    Ok(BoundsReport {
        c1: c.c1,
        c2: c.c2,
        r1: c.r1,
        r2: c.r2,
        c1_top,
        r1_top,
        c2_top: c.c2,
        r2_top: c.r2,
        delta_m: c.delta_m,
        delta_prime,
        ratio,
        nu_hat: res.nu_hat,
        beta_hat: res.beta_hat,
        lower_ok,
        upper_ok,
        lower_top_ok,
        upper_top_ok,
        uniqueness_threshold: uniqueness_threshold(spec),
    })
}
