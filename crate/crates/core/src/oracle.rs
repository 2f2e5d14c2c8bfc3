//! Brute-force references for the closed forms and the fiber solver.
//!
//! These are deliberately simple and slow: a dense sign-change scan of
//! `z − G₀(λ)`, composite Simpson quadrature of the geodesic equations, and the
//! Heisenberg Jacobian determinant.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expmap::GValue;
use crate::fiber::{lambda_bound, G0Profile, DEFAULT_ZERO_TOL};
use crate::model::{apply_j_scaled, BlockVec, Covector, GroupSpec, Point};

/// Pole neighbourhoods skipped by the scan have radius `POLE_EXCLUSION · step`.
pub const POLE_EXCLUSION: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub count: usize,
    /// Consecutive grid points between which `z − G₀` changes sign.
    pub roots: Vec<(f64, f64)>,
    pub step: f64,
    /// Values of `G₀` at its discrete local minima on `λ > 0`.
    pub critical_values: Vec<f64>,
}

/// The step used by the solver/oracle comparison: `min(2π/α_k, ρ) · 1e−5`.
pub fn default_step(spec: &GroupSpec, p: &Point) -> Result<f64> {
    Ok((TAU / spec.alpha_max()).min(lambda_bound(spec, p)?) * 1e-5)
}

fn near_pole(lambda: f64, alphas: &[f64], radius: f64) -> bool {
    alphas.iter().any(|&a| {
        let m = (lambda * a / TAU).round();
        m != 0.0 && (lambda - TAU * m / a).abs() < radius
    })
}

/// Counts sign changes of `z − G₀(λ)` on a uniform grid over `(−ρ, ρ)`.
pub fn grid_count(spec: &GroupSpec, p: &Point, step: f64) -> Result<GridReport> {
    let rho = lambda_bound(spec, p)?;
    let gap = TAU / spec.alpha_max();
    if !(step > 0.0) || step >= gap / 10.0 {
        return Err(Error::StepTooCoarse { step, gap });
    }
    let profile = G0Profile::new(spec, p, DEFAULT_ZERO_TOL)?;
    let alphas: Vec<f64> = profile.active_alphas().collect();
    let radius = POLE_EXCLUSION * step;
    let n = (2.0 * rho / step).floor() as usize;

    let mut count = 0;
    let mut roots = Vec::new();
    let mut critical_values = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    // Last two consecutive G₀ samples, cleared at every excluded point.
    let mut window: [Option<f64>; 2] = [None, None];
    for i in 1..n {
        let lambda = -rho + i as f64 * step;
        if near_pole(lambda, &alphas, radius) {
            window = [None, None];
            continue;
        }
        let v = match profile.value(lambda) {
            GValue::Finite(v) => v,
            GValue::Pole => {
                window = [None, None];
                continue;
            }
        };
        if lambda > 0.0 {
            if let [Some(a), Some(b)] = window {
                if b < a && b <= v {
                    critical_values.push(b);
                }
            }
            window = [window[1], Some(v)];
        }
        let f = p.z - v;
        if f == 0.0 {
            continue;
        }
        if let Some((pl, pf)) = prev {
            if (pf > 0.0) != (f > 0.0) {
                count += 1;
                roots.push((pl, lambda));
            }
        }
        prev = Some((lambda, f));
    }
    Ok(GridReport { count, roots, step, critical_values })
}

/// `ẋ_j(t) = e^{−λ α_j J t} u_j = cos(θ) u_j − sin(θ) J u_j` with `θ = λ α_j t`.
fn velocity(spec: &GroupSpec, u: &BlockVec, ju: &[f64], lambda: f64, t: f64, out: &mut [f64]) {
    for j in 0..spec.k() {
        let (s, c) = (lambda * spec.alpha(j) * t).sin_cos();
        for i in spec.block_range(j) {
            out[i] = c * u.as_slice()[i] - s * ju[i];
        }
    }
}

/// `½ ⟨A ẋ, x⟩`, the vertical velocity.
fn vertical_rate(spec: &GroupSpec, x: &[f64], xdot: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut ax = vec![0.0; x.len()];
    for j in 0..spec.k() {
        let r = spec.block_range(j);
        apply_j_scaled(spec.alpha(j), &xdot[r.clone()], &mut ax[r.clone()]);
        acc += ax[r.clone()].iter().zip(&x[r]).map(|(a, b)| a * b).sum::<f64>();
    }
    0.5 * acc
}

/// Endpoint of the geodesic by composite Simpson quadrature of
/// `ẋ = e^{−λAt} u`, `ż = ½ ⟨A ẋ, x⟩` with `steps` panels.
pub fn quad_endpoint(spec: &GroupSpec, cov: &Covector, steps: usize) -> Result<Point> {
    cov.u.check_layout(spec)?;
    if steps == 0 {
        return Err(Error::BadParameter("quadrature needs at least one panel".into()));
    }
    let d = spec.horizontal_dim();
    let mut ju = vec![0.0; d];
    for j in 0..spec.k() {
        let r = spec.block_range(j);
        apply_j_scaled(1.0, cov.u.block(j), &mut ju[r]);
    }
    let h = 1.0 / steps as f64;
    let lam = cov.lambda;
    let mut x = vec![0.0; d];
    let mut z = 0.0;
    let (mut f0, mut fq, mut fm, mut f3, mut f1) =
        (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut xm = vec![0.0; d];
    let mut x1 = vec![0.0; d];
    velocity(spec, &cov.u, &ju, lam, 0.0, &mut f0);
    for i in 0..steps {
        let t0 = i as f64 * h;
        velocity(spec, &cov.u, &ju, lam, t0 + 0.25 * h, &mut fq);
        velocity(spec, &cov.u, &ju, lam, t0 + 0.5 * h, &mut fm);
        velocity(spec, &cov.u, &ju, lam, t0 + 0.75 * h, &mut f3);
        velocity(spec, &cov.u, &ju, lam, t0 + h, &mut f1);
        for c in 0..d {
            xm[c] = x[c] + h / 12.0 * (f0[c] + 4.0 * fq[c] + fm[c]);
            x1[c] = xm[c] + h / 12.0 * (fm[c] + 4.0 * f3[c] + f1[c]);
        }
        let w0 = vertical_rate(spec, &x, &f0);
        let wm = vertical_rate(spec, &xm, &fm);
        let w1 = vertical_rate(spec, &x1, &f1);
        z += h / 6.0 * (w0 + 4.0 * wm + w1);
        std::mem::swap(&mut x, &mut x1);
        std::mem::swap(&mut f0, &mut f1);
    }
    Point::from_flat(spec, x, z)
}

/// `(λ sin λ + 2 cos λ − 2) / λ⁴`, by its Taylor series for `|λ| < 1`.
fn h3_kernel(lambda: f64) -> f64 {
    if lambda.abs() >= 1.0 {
        let l2 = lambda * lambda;
        return (lambda * lambda.sin() + 2.0 * lambda.cos() - 2.0) / (l2 * l2);
    }
    // Σ_{p≥2} (−1)^{p+1} 2(p−1)/(2p)! λ^{2p−4}
    let l2 = lambda * lambda;
    let mut sum = 0.0;
    let mut power = 1.0;
    let mut fact = 24.0;
    let mut p = 2.0_f64;
    loop {
        let sign = if (p as i64) % 2 == 0 { -1.0 } else { 1.0 };
        let term = sign * 2.0 * (p - 1.0) / fact * power;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        power *= l2;
        fact *= (2.0 * p + 1.0) * (2.0 * p + 2.0);
        p += 1.0;
    }
    sum
}

/// Determinant of the Jacobian of `(u₁, u₂, λ) ↦ (x₁, x₂, z)` on `ℍ₃`:
/// `−‖u‖² (λ sin λ + 2 cos λ − 2) / λ⁴`.
pub fn h3_jacobian_det(cov: &Covector) -> Result<f64> {
    if cov.u.as_slice().len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cov.u.as_slice().len() });
    }
    Ok(-cov.u.norm_sq() * h3_kernel(cov.lambda))
}
