//! Isometric equivalence of geodesics.
//!
//! The isometries fixing the origin act blockwise by `U(n_j)` (plus the reflection
//! `z ↦ −z`). Stabilizers are recorded by the ranks of their unitary factors, and
//! two geodesics with the same endpoint are equivalent iff they share `λ` and the
//! tuple of block norms `(‖u_1‖, …, ‖u_k‖)`.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expmap::{exp_map, is_pole};
use crate::fiber::{solve_families_with, FiberOptions, DEFAULT_ZERO_TOL};
use crate::model::{BlockVec, Covector, GroupSpec, Point};

/// Relative tolerance on `λ` and on block norms in [`iso_equivalent`].
pub const EQUIV_TOL: f64 = 1e-10;
/// Relative endpoint tolerance in [`iso_equivalent`].
pub const ENDPOINT_TOL: f64 = 1e-8;

/// `∏ U(dims[j])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnitaryFactorList {
    pub dims: Vec<usize>,
    pub real_dim: usize,
}

impl UnitaryFactorList {
    fn new(dims: Vec<usize>) -> Self {
        let real_dim = dims.iter().map(|d| d * d).sum();
        Self { dims, real_dim }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XFactor {
    Sphere(usize),
    Point,
}

impl Serialize for XFactor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            XFactor::Sphere(d) => s.serialize_str(&format!("S^{d}")),
            XFactor::Point => s.serialize_str("point"),
        }
    }
}

/// The orbit `X_γ` of a geodesic under the isometries fixing its endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XGammaShape {
    pub factors: Vec<XFactor>,
}

impl XGammaShape {
    pub fn sphere_count(&self) -> usize {
        self.factors.iter().filter(|f| matches!(f, XFactor::Sphere(_))).count()
    }
}

/// One family of `Γ∞(p)` modulo isometries: the cell `S^{ℓ−1}_{≥0}` of norm tuples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientFamily {
    pub lambda: f64,
    pub ell: usize,
    pub cell: String,
}

fn vanishing_blocks(v: &BlockVec, tol: f64) -> Vec<bool> {
    let scale = tol * v.norm().max(1.0);
    (0..v.num_blocks()).map(|j| v.block_norm_sq(j).sqrt() <= scale).collect()
}

fn stabilizer_of(spec: &GroupSpec, v: &BlockVec) -> Result<UnitaryFactorList> {
    v.check_layout(spec)?;
    let zero = vanishing_blocks(v, DEFAULT_ZERO_TOL);
    let dims = spec.mults().iter().zip(zero).map(|(&n, z)| if z { n } else { n - 1 }).collect();
    Ok(UnitaryFactorList::new(dims))
}

/// Isometries fixing `p`: `U(n_j)` on vanishing blocks, `U(n_j − 1)` otherwise.
pub fn stabilizer_point(spec: &GroupSpec, p: &Point) -> Result<UnitaryFactorList> {
    stabilizer_of(spec, &p.x)
}

/// Isometries fixing the whole geodesic: the same rule applied to `u`.
pub fn stabilizer_geodesic(spec: &GroupSpec, cov: &Covector) -> Result<UnitaryFactorList> {
    stabilizer_of(spec, &cov.u)
}

pub fn x_gamma(spec: &GroupSpec, cov: &Covector) -> Result<XGammaShape> {
    cov.u.check_layout(spec)?;
    let factors = (0..spec.k())
        .map(|j| {
            if cov.u.block_norm_sq(j) > 0.0 && is_pole(cov.lambda * spec.alpha(j)) {
                XFactor::Sphere(2 * spec.mults()[j] - 1)
            } else {
                XFactor::Point
            }
        })
        .collect();
    Ok(XGammaShape { factors })
}

pub fn quotient_families(spec: &GroupSpec, p: &Point, lambda_max: f64) -> Result<Vec<QuotientFamily>> {
    let opts = FiberOptions { lambda_max: Some(lambda_max), ..FiberOptions::default() };
    quotient_families_with(spec, p, &opts)
}

pub fn quotient_families_with(
    spec: &GroupSpec,
    p: &Point,
    opts: &FiberOptions,
) -> Result<Vec<QuotientFamily>> {
    let (families, _) = solve_families_with(spec, p, opts)?;
    Ok(families
        .into_iter()
        .map(|f| {
            let ell = f.blocks.len();
            QuotientFamily { lambda: f.lambda, ell, cell: format!("S^{}_{{>=0}}", ell - 1) }
        })
        .collect())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Whether two geodesics with a common endpoint differ by an isometry.
pub fn iso_equivalent(spec: &GroupSpec, cov1: &Covector, cov2: &Covector) -> Result<bool> {
    let e1 = exp_map(spec, cov1)?;
    let e2 = exp_map(spec, cov2)?;
    let dist = e1.distance(&e2);
    if dist > ENDPOINT_TOL * e1.norm().max(e2.norm()).max(1.0) {
        return Err(Error::EndpointMismatch(dist));
    }
    let norms_match = (0..spec.k())
        .all(|j| close(cov1.u.block_norm_sq(j).sqrt(), cov2.u.block_norm_sq(j).sqrt(), EQUIV_TOL));
    if !norms_match {
        return Ok(false);
    }
    if close(cov1.lambda, cov2.lambda, EQUIV_TOL) {
        return Ok(true);
    }
    // The reflection z ↦ −z fixes the endpoint only when z = 0, and it sends λ to −λ.
    Ok(e1.z == 0.0 && close(cov1.lambda, -cov2.lambda, EQUIV_TOL))
}
