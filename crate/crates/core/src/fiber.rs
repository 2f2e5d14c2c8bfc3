//! The fiber `Γ(p)` of the exponential map over a point `p = (x, z)`.
//!
//! Isolated geodesics are the roots of `z = G₀(λ)`, where
//! `G₀(λ) = Σ_{j∉I₀} α_j g(λα_j) ‖x_j‖²` is strictly convex between consecutive
//! poles. On each pole-free interval the minimum is located by bisecting on the
//! sign of `G₀'`, and each monotone half is then bisected for the level `z`, so no
//! root can be missed. Sphere families sit at poles of the vanishing blocks
//! `j ∈ I₀` that pass the sign test `(z − G₀(λ)) λ > 0`.

use std::f64::consts::{PI, TAU};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expmap::{g, g_prime, i_inverse_coeffs, GValue};
use crate::model::{BlockVec, Covector, GroupSpec, Point};

/// Default relative tolerance for deciding `x_j = 0`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
/// Relative distance below which two lattice poles are fused.
pub const POLE_MERGE_TOL: f64 = 1e-9;
/// Relative gap `|z − min G₀|` below which an interval minimum counts as a double root.
pub const TANGENCY_TOL: f64 = 1e-9;

const MAX_BISECT: usize = 200;
const BISECT_REL_WIDTH: f64 = 1e-12;

/// A count that may be infinite; serialized as an integer or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Finite(usize),
    Infinite,
}

impl Count {
    pub fn finite(self) -> Option<usize> {
        match self {
            Count::Finite(n) => Some(n),
            Count::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Count::Infinite)
    }
}

impl std::fmt::Display for Count {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Count::Finite(n) => s.serialize_u64(*n as u64),
            Count::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberOptions {
    /// Relative tolerance of the test `‖x_j‖ ≤ tol · max(1, ‖x‖)`.
    pub zero_tol: f64,
    /// Truncation of `Λ_p` when `x = 0`; defaults to `100π/α₁`.
    pub lambda_max: Option<f64>,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self { zero_tol: DEFAULT_ZERO_TOL, lambda_max: None }
    }
}

impl FiberOptions {
    pub fn lambda_max_for(&self, spec: &GroupSpec) -> f64 {
        self.lambda_max.unwrap_or(100.0 * PI / spec.alpha_min())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsolatedGeodesic {
    pub lambda: f64,
    pub covector: Covector,
    pub energy: f64,
    /// The root is a double root sitting at an interval minimum of `G₀`.
    pub tangential: bool,
}

/// A sphere `S^{2N−1}` of geodesics sharing the same `λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Family {
    pub lambda: f64,
    /// Blocks `j ∈ I₀` with `λ α_j ∈ 2πℤ`; their `u_j` range over the sphere.
    #[serde(rename = "L")]
    pub blocks: Vec<usize>,
    pub sphere_dim: usize,
    /// `Σ_{j∈L} ‖u_j‖²`.
    pub radius_sq: f64,
    pub energy: f64,
    /// `u_j` for `j ∉ L`; the blocks in `L` are zero here.
    #[serde(skip)]
    pub fixed_blocks: BlockVec,
}

impl Family {
    /// The member of the family whose free blocks point along `dirs` (one vector per
    /// entry of `L`), rescaled so that their joint squared norm is `radius_sq`.
    pub fn representative(&self, spec: &GroupSpec, dirs: &[Vec<f64>]) -> Result<Covector> {
        if dirs.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch { expected: self.blocks.len(), got: dirs.len() });
        }
        let total: f64 = dirs.iter().flatten().map(|v| v * v).sum();
        if !(total > 0.0) {
            return Err(Error::BadParameter("representative direction is zero".into()));
        }
        let scale = (self.radius_sq / total).sqrt();
        let mut u = self.fixed_blocks.clone();
        for (&j, d) in self.blocks.iter().zip(dirs) {
            let dst = u.block_mut(j);
            if d.len() != dst.len() {
                return Err(Error::DimensionMismatch { expected: dst.len(), got: d.len() });
            }
            for (t, s) in dst.iter_mut().zip(d) {
                *t = s * scale;
            }
        }
        u.check_layout(spec)?;
        Ok(Covector { u, lambda: self.lambda })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberResult {
    pub isolated: Vec<IsolatedGeodesic>,
    pub families: Vec<Family>,
    /// `x = 0`: `Λ_p` is infinite and `families` is truncated.
    pub infinite_families: bool,
    pub nu_hat: Count,
    pub beta_hat: Count,
}

/// A fused pole of the lattices `2π/α_j · ℤ`, with the blocks that share it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleEntry {
    pub lambda: f64,
    pub blocks: Vec<usize>,
}

/// Blocks of `p` that vanish: `‖x_j‖ ≤ tol · max(1, ‖x‖)`.
pub fn index_i0(spec: &GroupSpec, p: &Point, tol: f64) -> Vec<usize> {
    let scale = tol * p.x.norm().max(1.0);
    (0..spec.k()).filter(|&j| p.x.block_norm_sq(j).sqrt() <= scale).collect()
}

/// The data `G₀` depends on: `(α_j, ‖x_j‖²)` for each non-vanishing block.
#[derive(Debug, Clone)]
pub struct G0Profile {
    terms: Vec<(f64, f64)>,
    i0: Vec<usize>,
}

impl G0Profile {
    pub fn new(spec: &GroupSpec, p: &Point, zero_tol: f64) -> Result<Self> {
        p.x.check_layout(spec)?;
        let i0 = index_i0(spec, p, zero_tol);
        let terms = (0..spec.k())
            .filter(|j| !i0.contains(j))
            .map(|j| (spec.alpha(j), p.x.block_norm_sq(j)))
            .collect();
        Ok(Self { terms, i0 })
    }

    pub fn i0(&self) -> &[usize] {
        &self.i0
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn active_alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.0)
    }

    pub fn value(&self, lambda: f64) -> GValue {
        let mut sum = 0.0;
        for &(a, w) in &self.terms {
            match g(lambda * a) {
                GValue::Finite(v) => sum += a * v * w,
                GValue::Pole => return GValue::Pole,
            }
        }
        GValue::Finite(sum)
    }

    pub fn derivative(&self, lambda: f64) -> Result<f64> {
        let mut sum = 0.0;
        for &(a, w) in &self.terms {
            sum += a * a * g_prime(lambda * a)? * w;
        }
        Ok(sum)
    }
}

/// `G₀(λ)` with the default zero tolerance.
pub fn g0(spec: &GroupSpec, p: &Point, lambda: f64) -> Result<GValue> {
    Ok(G0Profile::new(spec, p, DEFAULT_ZERO_TOL)?.value(lambda))
}

/// `ρ = 8|z| / (α₁² ‖x‖²) + π α_k / α₁²`, a strict bound on `|λ|` over the fiber.
pub fn lambda_bound(spec: &GroupSpec, p: &Point) -> Result<f64> {
    let xn = p.x.norm_sq();
    if xn == 0.0 {
        return Err(Error::ZeroHorizontal);
    }
    let a1 = spec.alpha_min();
    Ok(8.0 * p.z.abs() / (a1 * a1 * xn) + PI * spec.alpha_max() / (a1 * a1))
}

/// Merged positive poles `λ ≤ upper` of the lattices of the blocks in `include`.
fn merged_lattice(spec: &GroupSpec, include: &[usize], upper: f64) -> Vec<PoleEntry> {
    let mut raw: Vec<(f64, usize)> = Vec::new();
    for &j in include {
        let spacing = TAU / spec.alpha(j);
        let mut m = 1.0;
        loop {
            let lambda = spacing * m;
            if lambda > upper {
                break;
            }
            raw.push((lambda, j));
            m += 1.0;
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<PoleEntry> = Vec::new();
    for (lambda, j) in raw {
        match out.last_mut() {
            Some(last) if lambda - last.lambda < POLE_MERGE_TOL * last.lambda.max(1.0) => {
                if !last.blocks.contains(&j) {
                    last.blocks.push(j);
                }
            }
            _ => out.push(PoleEntry { lambda, blocks: vec![j] }),
        }
    }
    out
}

/// Sorted poles of `G₀` in `(0, ρ)`: the lattices of the blocks outside `i0`, fused.
pub fn pole_grid(spec: &GroupSpec, i0: &[usize], rho: f64) -> Vec<PoleEntry> {
    let active: Vec<usize> = (0..spec.k()).filter(|j| !i0.contains(j)).collect();
    let mut poles = merged_lattice(spec, &active, rho);
    poles.retain(|e| e.lambda < rho);
    poles
}

/// Bisection keeping `go_right(lo)` true and `go_right(hi)` false.
fn bisect(mut lo: f64, mut hi: f64, go_right: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        if hi - lo < BISECT_REL_WIDTH * mid.abs().max(1.0) || mid == lo || mid == hi {
            break;
        }
        if go_right(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn above(v: GValue, level: f64) -> bool {
    match v {
        GValue::Finite(x) => x > level,
        GValue::Pole => true,
    }
}

/// Minimiser of `G₀` on the pole-free interval `(a, b)`.
fn interval_minimum(profile: &G0Profile, a: f64, b: f64) -> f64 {
    bisect(a, b, |mid| match profile.derivative(mid) {
        Ok(d) => d < 0.0,
        Err(_) => mid - a < b - mid,
    })
}

/// A root `λ > 0` of `G₀(λ) = level` for a positive level.
struct PositiveRoot {
    lambda: f64,
    tangential: bool,
}

/// Pole-free intervals `(e_i, e_{i+1})` of `G₀` on `(0, ∞)` that meet `(0, ρ)`.
fn positive_intervals(spec: &GroupSpec, profile: &G0Profile, rho: f64) -> Vec<(f64, f64)> {
    let active: Vec<usize> = (0..spec.k()).filter(|j| !profile.i0.contains(j)).collect();
    let reach = profile.active_alphas().map(|a| TAU / a).fold(0.0, f64::max);
    let poles = merged_lattice(spec, &active, rho + reach);
    let mut ends = Vec::with_capacity(poles.len() + 1);
    ends.push(0.0);
    ends.extend(poles.iter().map(|e| e.lambda));
    ends.windows(2).filter(|w| w[0] < rho).map(|w| (w[0], w[1])).collect()
}

fn positive_roots(spec: &GroupSpec, profile: &G0Profile, level: f64, rho: f64) -> Vec<PositiveRoot> {
    let mut roots = Vec::new();
    for (a, b) in positive_intervals(spec, profile, rho) {
        if a == 0.0 {
            // G₀ increases from 0 to +∞ on (0, first pole).
            let lambda = bisect(a, b, |mid| !above(profile.value(mid), level));
            roots.push(PositiveRoot { lambda, tangential: false });
            continue;
        }
        let m = interval_minimum(profile, a, b);
        let min_value = match profile.value(m) {
            GValue::Finite(v) => v,
            GValue::Pole => continue,
        };
        if (level - min_value).abs() <= TANGENCY_TOL * level.abs().max(1.0) {
            roots.push(PositiveRoot { lambda: m, tangential: true });
        } else if level > min_value {
            let left = bisect(a, m, |mid| above(profile.value(mid), level));
            let right = bisect(m, b, |mid| !above(profile.value(mid), level));
            roots.push(PositiveRoot { lambda: left, tangential: false });
            roots.push(PositiveRoot { lambda: right, tangential: false });
        }
    }
    roots
}

/// `u_j = I(λα_j)⁻¹ x_j` outside `skip`, zero on `skip`.
fn reconstruct(spec: &GroupSpec, p: &Point, lambda: f64, skip: &[usize]) -> Result<BlockVec> {
    let mut u = BlockVec::zeros(spec);
    for j in 0..spec.k() {
        if skip.contains(&j) {
            continue;
        }
        let uj = i_inverse_coeffs(lambda * spec.alpha(j))?.apply(p.x.block(j));
        u.block_mut(j).copy_from_slice(&uj);
    }
    Ok(u)
}

fn check_point(spec: &GroupSpec, p: &Point) -> Result<()> {
    p.x.check_layout(spec)?;
    if p.is_origin() {
        return Err(Error::OriginPoint);
    }
    Ok(())
}

pub fn solve_isolated(spec: &GroupSpec, p: &Point) -> Result<Vec<IsolatedGeodesic>> {
    solve_isolated_with(spec, p, &FiberOptions::default())
}

/// All isolated geodesics `Γ₀(p)`, sorted by `λ`.
pub fn solve_isolated_with(
    spec: &GroupSpec,
    p: &Point,
    opts: &FiberOptions,
) -> Result<Vec<IsolatedGeodesic>> {
    check_point(spec, p)?;
    let profile = G0Profile::new(spec, p, opts.zero_tol)?;
    if profile.is_empty() {
        // x = 0 and z ≠ 0: G₀ ≡ 0 never reaches z.
        return Ok(Vec::new());
    }
    if p.z == 0.0 {
        let u = reconstruct(spec, p, 0.0, profile.i0())?;
        let covector = Covector { u, lambda: 0.0 };
        let energy = 0.5 * covector.u.norm_sq();
        return Ok(vec![IsolatedGeodesic { lambda: 0.0, covector, energy, tangential: false }]);
    }
    let sign = p.z.signum();
    let rho = lambda_bound(spec, p)?;
    let mut out = Vec::new();
    for root in positive_roots(spec, &profile, p.z.abs(), rho) {
        let lambda = sign * root.lambda;
        let u = reconstruct(spec, p, lambda, profile.i0())?;
        let covector = Covector { u, lambda };
        let energy = 0.5 * covector.u.norm_sq();
        out.push(IsolatedGeodesic { lambda, covector, energy, tangential: root.tangential });
    }
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(out)
}

/// Minima `(λ, G₀(λ))` of `G₀` over the interior pole-free intervals meeting `(0, ρ)`.
///
/// The values are the critical levels of `|z|` at which the isolated count jumps.
pub fn critical_levels(spec: &GroupSpec, p: &Point, opts: &FiberOptions) -> Result<Vec<(f64, f64)>> {
    p.x.check_layout(spec)?;
    let profile = G0Profile::new(spec, p, opts.zero_tol)?;
    if profile.is_empty() {
        return Ok(Vec::new());
    }
    let rho = lambda_bound(spec, p)?;
    let mut out = Vec::new();
    for (a, b) in positive_intervals(spec, &profile, rho) {
        if a == 0.0 {
            continue;
        }
        let m = interval_minimum(&profile, a, b);
        if let GValue::Finite(v) = profile.value(m) {
            out.push((m, v));
        }
    }
    Ok(out)
}

/// Sphere families `Γ∞(p)` and whether `Λ_p` is infinite (`x = 0`).
pub fn solve_families(spec: &GroupSpec, p: &Point, lambda_max: f64) -> Result<(Vec<Family>, bool)> {
    let opts = FiberOptions { lambda_max: Some(lambda_max), ..FiberOptions::default() };
    solve_families_with(spec, p, &opts)
}

pub fn solve_families_with(spec: &GroupSpec, p: &Point, opts: &FiberOptions) -> Result<(Vec<Family>, bool)> {
    check_point(spec, p)?;
    let profile = G0Profile::new(spec, p, opts.zero_tol)?;
    let infinite = profile.is_empty();
    if profile.i0().is_empty() || p.z == 0.0 {
        return Ok((Vec::new(), infinite));
    }
    let upper = if infinite { opts.lambda_max_for(spec) } else { lambda_bound(spec, p)? };
    let sign = p.z.signum();
    let level = p.z.abs();
    let mut families = Vec::new();
    for cand in merged_lattice(spec, profile.i0(), upper) {
        let g0 = match profile.value(cand.lambda) {
            GValue::Finite(v) => v,
            GValue::Pole => continue,
        };
        if level - g0 <= 0.0 {
            continue;
        }
        let lambda = sign * cand.lambda;
        let radius_sq = 2.0 * cand.lambda * (level - g0);
        let fixed_blocks = reconstruct(spec, p, lambda, profile.i0())?;
        let n: usize = cand.blocks.iter().map(|&j| spec.mults()[j]).sum();
        let energy = 0.5 * (fixed_blocks.norm_sq() + radius_sq);
        let mut blocks = cand.blocks;
        blocks.sort_unstable();
        families.push(Family { lambda, blocks, sphere_dim: 2 * n - 1, radius_sq, energy, fixed_blocks });
    }
    families.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok((families, infinite))
}

pub fn fiber(spec: &GroupSpec, p: &Point, lambda_max: f64) -> Result<FiberResult> {
    let opts = FiberOptions { lambda_max: Some(lambda_max), ..FiberOptions::default() };
    fiber_with(spec, p, &opts)
}

/// `Γ(p) = Γ₀(p) ∪ Γ∞(p)` together with `ν̂(p)` and `β̂(p)`.
pub fn fiber_with(spec: &GroupSpec, p: &Point, opts: &FiberOptions) -> Result<FiberResult> {
    let isolated = solve_isolated_with(spec, p, opts)?;
    let (families, infinite_families) = solve_families_with(spec, p, opts)?;
    let nu_hat = if infinite_families || !families.is_empty() {
        Count::Infinite
    } else {
        Count::Finite(isolated.len())
    };
    let beta_hat =
        if infinite_families { Count::Infinite } else { Count::Finite(isolated.len() + 2 * families.len()) };
    Ok(FiberResult { isolated, families, infinite_families, nu_hat, beta_hat })
}
