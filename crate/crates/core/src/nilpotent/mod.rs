//! Nilpotent approximation of a contact frame at a base point.
//!
//! Brackets `[f_i, f_j](p₀)` are expanded in the basis `f_1, …, f_{2n}, f_0`; the
//! `f_0` coefficients form the skew structure matrix `A`, whose singular values
//! and multiplicities identify the tangent contact Carnot group.

mod polynomial;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::GroupSpec;

pub use polynomial::{PolyField, PolynomialFrame, Term};

/// Default relative clustering tolerance for singular values.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;
/// Largest accepted `‖A + Aᵀ‖` before symmetrisation.
pub const MAX_SKEW_DEFECT: f64 = 1e-4;
/// `A` is degenerate when `α_min < CONTACT_TOL · α_max`.
pub const CONTACT_TOL: f64 = 1e-8;
/// The basis `f_1(p₀), …, f_0(p₀)` is degenerate below this reciprocal condition number.
pub const BASIS_RCOND: f64 = 1e-12;
/// Largest accepted `|b_i(p₀)|` (relative) for adapted coordinates.
pub const ADAPTED_TOL: f64 = 1e-8;

/// A frame `f_1, …, f_{2n}` with a transversal field `f_0` on `ℝ^{2n+1}`.
///
/// Field `0` is `f_0`; fields `1..=2n` are the horizontal ones. Implementations
/// must be reentrant.
pub trait FrameOracle {
    fn dim(&self) -> usize;

    fn base_point(&self) -> Vec<f64>;

    fn field(&self, i: usize, q: &[f64]) -> Result<Vec<f64>>;

    /// Exact Jacobian `∂(f_i)_a / ∂q_b`, if known; otherwise finite differences are used.
    fn field_jacobian(&self, _i: usize, _q: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// A frame given by a closure `(i, q) ↦ f_i(q)`.
pub struct FnFrame<F> {
    pub dim: usize,
    pub base_point: Vec<f64>,
    pub eval: F,
}

impl<F: Fn(usize, &[f64]) -> Vec<f64>> FrameOracle for FnFrame<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn base_point(&self) -> Vec<f64> {
        self.base_point.clone()
    }

    fn field(&self, i: usize, q: &[f64]) -> Result<Vec<f64>> {
        let v = (self.eval)(i, q);
        if v.len() != self.dim {
            return Err(Error::DegenerateFrame(format!(
                "field {i} has {} components, expected {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateFrame(format!("field {i} is not finite")));
        }
        Ok(v)
    }
}

/// Serialises a matrix as a list of rows.
pub fn serialize_rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

/// `h = 1e−5 · (1 + ‖p₀‖)`.
pub fn default_step(frame: &dyn FrameOracle) -> f64 {
    let p = frame.base_point();
    1e-5 * (1.0 + p.iter().map(|x| x * x).sum::<f64>().sqrt())
}

fn axpy(p: &[f64], t: f64, v: &[f64]) -> Vec<f64> {
    p.iter().zip(v).map(|(a, b)| a + t * b).collect()
}

/// Richardson-extrapolated central difference of `f` at `p` along `v`.
fn directional<G>(f: G, p: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(vec![0.0; p.len()]);
    }
    let dir: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let central = |h: f64| -> Result<Vec<f64>> {
        let fp = f(&axpy(p, h, &dir))?;
        let fm = f(&axpy(p, -h, &dir))?;
        Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| norm * (4.0 * b - a) / 3.0).collect())
}

/// `D f_j (p₀) · v`.
fn field_derivative(frame: &dyn FrameOracle, j: usize, p: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>> {
    if let Some(jac) = frame.field_jacobian(j, p) {
        return Ok((jac * DVector::from_column_slice(v)).as_slice().to_vec());
    }
    directional(|q| frame.field(j, q), p, v, h)
}

/// `[f_i, f_j](p₀) = D f_j · f_i − D f_i · f_j`.
pub fn bracket_at(frame: &dyn FrameOracle, i: usize, j: usize, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::BadParameter(format!("step {h} must be positive")));
    }
    let p = frame.base_point();
    let fi = frame.field(i, &p)?;
    let fj = frame.field(j, &p)?;
    let dj = field_derivative(frame, j, &p, &fi, h)?;
    let di = field_derivative(frame, i, &p, &fj, h)?;
    Ok(dj.iter().zip(&di).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureMatrix {
    /// Skew-symmetrised `A`.
    #[serde(rename = "A", serialize_with = "serialize_rows")]
    pub a: DMatrix<f64>,
    /// `‖A + Aᵀ‖_F` before symmetrisation.
    pub skewness_defect: f64,
    /// Condition number of the basis `f_1(p₀), …, f_{2n}(p₀), f_0(p₀)`.
    pub basis_condition: f64,
}

fn basis_matrix(frame: &dyn FrameOracle) -> Result<DMatrix<f64>> {
    let d = frame.dim();
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::DegenerateFrame(format!("dimension {d} is not 2n + 1")));
    }
    let p = frame.base_point();
    if p.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    let mut m = DMatrix::zeros(d, d);
    for c in 0..d {
        // Columns f_1, …, f_{2n}, then f_0.
        let idx = if c + 1 < d { c + 1 } else { 0 };
        let v = frame.field(idx, &p)?;
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        m.set_column(c, &DVector::from_vec(v));
    }
    Ok(m)
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Structure matrix `A_ij = c_ij⁰(p₀)` from numerical brackets.
pub fn structure_matrix(frame: &dyn FrameOracle, h: f64) -> Result<StructureMatrix> {
    let basis = basis_matrix(frame)?;
    let cond = condition(&basis);
    if !(cond * BASIS_RCOND < 1.0) {
        return Err(Error::DegenerateFrame(format!("basis condition number {cond:e}")));
    }
    let lu = basis.clone().lu();
    let d = frame.dim() - 1;
    let mut raw = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let br = DVector::from_vec(bracket_at(frame, i + 1, j + 1, h)?);
            let coeffs = lu.solve(&br).ok_or_else(|| Error::DegenerateFrame("singular basis".into()))?;
            raw[(i, j)] = coeffs[d];
        }
    }
    let defect = (&raw + raw.transpose()).norm();
    if defect > MAX_SKEW_DEFECT {
        return Err(Error::ExcessiveSkewDefect(defect));
    }
    let a = (&raw - raw.transpose()) * 0.5;
    let sv = a.clone().singular_values();
    let (min, max) = (sv.min(), sv.max());
    if !(max > 0.0) || min < CONTACT_TOL * max {
        return Err(Error::NotContact(min));
    }
    Ok(StructureMatrix { a, skewness_defect: defect, basis_condition: cond })
}

/// Structure matrix from a contact form: `A_ij = −dα(f_i, f_j) / α(f_0)` at `p₀`.
pub fn structure_matrix_from_form<F>(frame: &dyn FrameOracle, form: F, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let dim = frame.dim();
    let p = frame.base_point();
    // dalpha[(a, b)] = ∂_a α_b − ∂_b α_a
    let mut grad = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        let mut e = vec![0.0; dim];
        e[a] = 1.0;
        let col = directional(|q| Ok(form(q)), &p, &e, h)?;
        for b in 0..dim {
            grad[(a, b)] = col[b];
        }
    }
    let dalpha = &grad - grad.transpose();
    let alpha = form(&p);
    let f0 = frame.field(0, &p)?;
    let a0: f64 = alpha.iter().zip(&f0).map(|(x, y)| x * y).sum();
    if a0 == 0.0 {
        return Err(Error::DegenerateFrame("f_0 lies in the kernel of the form".into()));
    }
    let fields: Vec<DVector<f64>> =
        (1..dim).map(|i| frame.field(i, &p).map(DVector::from_vec)).collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(dim - 1, dim - 1, |i, j| {
        -(fields[i].transpose() * &dalpha * &fields[j])[(0, 0)] / a0
    }))
}

/// Canonical form of a skew matrix: the group it defines and an orthogonal `M`
/// with `Mᵀ A M = diag(α_j J_{n_j})`.
pub fn canonical_form(a: &DMatrix<f64>, cluster_tol: f64) -> Result<(GroupSpec, DMatrix<f64>)> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: a.ncols() });
    }
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::BadParameter(format!("skew matrix of odd size {d}")));
    }
    let minus_a2 = a.transpose() * a;
    let eig = SymmetricEigen::new(minus_a2);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let sv: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    let max = sv[d - 1];
    if !(max > 0.0) || sv[0] < CONTACT_TOL * max {
        return Err(Error::NotContact(sv[0]));
    }

    // Single-linkage clusters of the sorted singular values.
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for r in 1..d {
        if sv[r] - sv[r - 1] > cluster_tol * max {
            clusters.push(Vec::new());
        }
        clusters.last_mut().expect("nonempty").push(r);
    }

    let mut alphas = Vec::with_capacity(clusters.len());
    let mut mults = Vec::with_capacity(clusters.len());
    let mut basis = DMatrix::zeros(d, d);
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut col = 0;
    for cl in &clusters {
        if cl.len() % 2 != 0 {
            return Err(Error::BadParameter(format!(
                "singular value cluster of odd size {} near {}",
                cl.len(),
                sv[cl[0]]
            )));
        }
        let m = cl.len() / 2;
        let alpha = cl.iter().map(|&r| sv[r]).sum::<f64>() / cl.len() as f64;
        let mut es = Vec::with_capacity(m);
        let mut fs = Vec::with_capacity(m);
        for &r in cl {
            if es.len() == m {
                break;
            }
            let mut e = eig.eigenvectors.column(order[r]).into_owned();
            for w in &chosen {
                let c = w.dot(&e);
                e -= w * c;
            }
            let norm = e.norm();
            if norm < 0.5 {
                continue;
            }
            e /= norm;
            let mut f = -(a * &e);
            f /= f.norm();
            chosen.push(e.clone());
            chosen.push(f.clone());
            es.push(e);
            fs.push(f);
        }
        if es.len() != m {
            return Err(Error::BadParameter("eigenspace too small for its cluster".into()));
        }
        for v in es.iter().chain(fs.iter()) {
            basis.set_column(col, v);
            col += 1;
        }
        alphas.push(alpha);
        mults.push(m);
    }
    Ok((GroupSpec::new(alphas, mults)?, basis))
}

/// Relation `x = Bθ`, `z = θᵀ S θ + c ρ` between adapted and exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateChange {
    #[serde(rename = "B", serialize_with = "serialize_rows")]
    pub b: DMatrix<f64>,
    #[serde(rename = "S", serialize_with = "serialize_rows")]
    pub s: DMatrix<f64>,
    pub c: f64,
}

impl CoordinateChange {
    /// `‖(S − Sᵀ)/2‖_F`, the part of `S` that `θᵀ S θ` never sees.
    pub fn skew_remainder(&self) -> f64 {
        ((&self.s - self.s.transpose()) * 0.5).norm()
    }

    fn quadratic(&self, theta: &DVector<f64>) -> f64 {
        let sym = (&self.s + self.s.transpose()) * 0.5;
        (theta.transpose() * sym * theta)[(0, 0)]
    }

    /// Exponential `(θ, ρ)` to adapted `(x, z)`.
    pub fn to_adapted(&self, theta: &[f64], rho: f64) -> Result<(Vec<f64>, f64)> {
        if theta.len() != self.b.ncols() {
            return Err(Error::DimensionMismatch { expected: self.b.ncols(), got: theta.len() });
        }
        let t = DVector::from_column_slice(theta);
        let x = &self.b * &t;
        Ok((x.as_slice().to_vec(), self.quadratic(&t) + self.c * rho))
    }

    /// Adapted `(x, z)` to exponential `(θ, ρ)`.
    pub fn to_exponential(&self, x: &[f64], z: f64) -> Result<(Vec<f64>, f64)> {
        if x.len() != self.b.nrows() {
            return Err(Error::DimensionMismatch { expected: self.b.nrows(), got: x.len() });
        }
        let theta = self
            .b
            .clone()
            .lu()
            .solve(&DVector::from_column_slice(x))
            .ok_or_else(|| Error::DegenerateFrame("B is singular".into()))?;
        let rho = (z - self.quadratic(&theta)) / self.c;
        Ok((theta.as_slice().to_vec(), rho))
    }
}

/// `B_ij = (f_j)_i(p₀)`, `c = (f_0)_z(p₀)`, `S_ij = ½ Σ_ℓ ∂b_i/∂x_ℓ(p₀) B_ℓj`.
pub fn coordinate_change(frame: &dyn FrameOracle, h: f64) -> Result<CoordinateChange> {
    let basis = basis_matrix(frame)?;
    let d = frame.dim() - 1;
    let b = basis.view((0, 0), (d, d)).into_owned();
    if condition(&b) * BASIS_RCOND >= 1.0 {
        return Err(Error::DegenerateFrame("B is singular".into()));
    }
    let scale = b.norm().max(1.0);
    for i in 0..d {
        if basis[(d, i)].abs() > ADAPTED_TOL * scale {
            return Err(Error::DegenerateFrame(format!(
                "coordinates are not adapted: f_{} has vertical part {:e}",
                i + 1,
                basis[(d, i)]
            )));
        }
    }
    let c = basis[(d, d)];
    if c == 0.0 {
        return Err(Error::DegenerateFrame("f_0 has no vertical part".into()));
    }
    let p = frame.base_point();
    // db[(i, l)] = ∂b_i / ∂x_l
    let mut db = DMatrix::zeros(d, d);
    for l in 0..d {
        let mut e = vec![0.0; d + 1];
        e[l] = 1.0;
        for i in 0..d {
            db[(i, l)] = field_derivative(frame, i + 1, &p, &e, h)?[d];
        }
    }
    let s = (db * &b) * 0.5;
    Ok(CoordinateChange { b, s, c })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NilpotentResult {
    #[serde(rename = "A", serialize_with = "serialize_rows")]
    pub a: DMatrix<f64>,
    pub spec: GroupSpec,
    #[serde(serialize_with = "serialize_rows")]
    pub basis_change: DMatrix<f64>,
    pub skewness_defect: f64,
    pub adapted_to_exp: Option<CoordinateChange>,
}

/// Structure matrix, canonical group and, when the coordinates are adapted, the
/// coordinate change.
pub fn nilpotentize(frame: &dyn FrameOracle, h: f64, cluster_tol: f64) -> Result<NilpotentResult> {
    let sm = structure_matrix(frame, h)?;
    let (spec, basis_change) = canonical_form(&sm.a, cluster_tol)?;
    let adapted_to_exp = coordinate_change(frame, h).ok();
    Ok(NilpotentResult { a: sm.a, spec, basis_change, skewness_defect: sm.skewness_defect, adapted_to_exp })
}

/// `diag(α_j J_{n_j})` as a dense matrix.
pub fn canonical_matrix(spec: &GroupSpec) -> DMatrix<f64> {
    let a = spec.dense_a();
    let d = spec.horizontal_dim();
    DMatrix::from_fn(d, d, |i, j| a[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        m.qr().q()
    }

    /// The explicit frame evaluated by closure, so brackets go through finite differences.
    fn fd_frame(a: DMatrix<f64>) -> FnFrame<impl Fn(usize, &[f64]) -> Vec<f64>> {
        let d = a.nrows();
        FnFrame {
            dim: d + 1,
            base_point: vec![0.0; d + 1],
            eval: move |i, q: &[f64]| {
                let mut v = vec![0.0; d + 1];
                if i == 0 {
                    v[d] = 1.0;
                } else {
                    v[i - 1] = 1.0;
                    v[d] = -0.5 * (0..d).map(|j| a[(i - 1, j)] * q[j]).sum::<f64>();
                }
                v
            },
        }
    }

    #[test]
    fn heisenberg_bracket() {
        let h = GroupSpec::heisenberg(2).unwrap();
        let frame = fd_frame(canonical_matrix(&h));
        let br = bracket_at(&frame, 1, 3, 1e-5).unwrap();
        assert!(br[..4].iter().all(|v| v.abs() < 1e-9));
        assert!((br[4] - 1.0).abs() < 1e-9);
        let br = bracket_at(&frame, 2, 2, 1e-5).unwrap();
        assert!(br.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn commuting_fields_have_zero_bracket() {
        let frame = FnFrame {
            dim: 3,
            base_point: vec![0.0; 3],
            eval: |i: usize, _q: &[f64]| {
                let mut v = vec![0.0; 3];
                v[if i == 0 { 2 } else { i - 1 }] = 1.0;
                v
            },
        };
        assert!(bracket_at(&frame, 1, 2, 1e-5).unwrap().iter().all(|v| *v == 0.0));
        assert!(matches!(structure_matrix(&frame, 1e-5), Err(Error::NotContact(_))));
    }

    #[test]
    fn structure_matrix_recovers_a() {
        for (alphas, mults) in [(vec![1.0], vec![1]), (vec![1.0, 3.0], vec![1, 1])] {
            let spec = GroupSpec::new(alphas, mults).unwrap();
            let a = canonical_matrix(&spec);
            let sm = structure_matrix(&fd_frame(a.clone()), 1e-5).unwrap();
            assert!((&sm.a - &a).amax() < 1e-6);
            let exact = structure_matrix(&PolynomialFrame::explicit_for(&spec), 1e-5).unwrap();
            assert!((&exact.a - &a).amax() < 1e-12);
            assert_eq!(exact.skewness_defect, 0.0);
        }
    }

    #[test]
    fn conformal_rescaling_keeps_a() {
        let spec = GroupSpec::new(vec![1.0, 2.0], vec![1, 1]).unwrap();
        let a = canonical_matrix(&spec);
        let base = fd_frame(a.clone());
        // φ = 1 + |q|² has φ(0) = 1 and ∇φ(0) = 0.
        let scaled = FnFrame {
            dim: 5,
            base_point: vec![0.0; 5],
            eval: move |i, q: &[f64]| {
                let phi = 1.0 + q.iter().map(|x| x * x).sum::<f64>();
                let mut v = (base.eval)(i, q);
                if i > 0 {
                    v.iter_mut().for_each(|x| *x *= phi);
                }
                v
            },
        };
        let sm = structure_matrix(&scaled, 1e-5).unwrap();
        assert!((&sm.a - &a).amax() < 1e-6);
    }

    #[test]
    fn canonical_form_examples() {
        let h = GroupSpec::heisenberg(3).unwrap();
        let (spec, m) = canonical_form(&canonical_matrix(&h), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(spec.mults(), &[3]);
        assert!((spec.alpha(0) - 1.0).abs() < 1e-12);
        assert!((m.transpose() * &m - DMatrix::identity(6, 6)).amax() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let target = GroupSpec::new(vec![1.0, 2.0], vec![1, 1]).unwrap();
        let q = random_orthogonal(4, &mut rng);
        let a = q.transpose() * canonical_matrix(&target) * &q;
        let (spec, m) = canonical_form(&a, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(spec.mults(), &[1, 1]);
        assert!((spec.alpha(0) - 1.0).abs() < 1e-10 && (spec.alpha(1) - 2.0).abs() < 1e-10);
        let canon = m.transpose() * &a * &m;
        assert!((canon - canonical_matrix(&spec)).amax() < 1e-8);

        assert!(matches!(
            canonical_form(&DMatrix::zeros(4, 4), DEFAULT_CLUSTER_TOL),
            Err(Error::NotContact(_))
        ));
    }

    #[test]
    fn canonical_form_with_multiplicities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let target = GroupSpec::new(vec![0.7, 1.5, 4.0], vec![2, 1, 3]).unwrap();
        let q = random_orthogonal(target.horizontal_dim(), &mut rng);
        let a = q.transpose() * canonical_matrix(&target) * &q;
        let (spec, m) = canonical_form(&a, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(spec.mults(), target.mults());
        for (x, y) in spec.alphas().iter().zip(target.alphas()) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((m.transpose() * &m - DMatrix::identity(12, 12)).amax() < 1e-10);
        assert!((m.transpose() * &a * &m - canonical_matrix(&spec)).amax() < 1e-8);
    }

    #[test]
    fn form_route_agrees_with_brackets() {
        let spec = GroupSpec::new(vec![1.0, 2.5], vec![1, 1]).unwrap();
        let a = canonical_matrix(&spec);
        let frame = PolynomialFrame::explicit_for(&spec);
        let a2 = a.clone();
        // α = dz + ½ Σ A_ij x_j dx_i annihilates every f_i and has α(f_0) = 1.
        let form = move |q: &[f64]| {
            let d = a2.nrows();
            let mut w = vec![0.0; d + 1];
            for i in 0..d {
                w[i] = 0.5 * (0..d).map(|j| a2[(i, j)] * q[j]).sum::<f64>();
            }
            w[d] = 1.0;
            w
        };
        let from_form = structure_matrix_from_form(&frame, form, 1e-5).unwrap();
        let from_brackets = structure_matrix(&frame, 1e-5).unwrap().a;
        assert!((from_form - from_brackets).amax() < 1e-5);
    }

    #[test]
    fn explicit_frame_coordinate_change() {
        let spec = GroupSpec::new(vec![1.0, 2.0], vec![1, 1]).unwrap();
        let a = canonical_matrix(&spec);
        let cc = coordinate_change(&fd_frame(a.clone()), 1e-5).unwrap();
        assert!((&cc.b - DMatrix::identity(4, 4)).amax() < 1e-12);
        assert_eq!(cc.c, 1.0);
        assert!((&cc.s + &a * 0.25).amax() < 1e-9);
        let (x, z) = cc.to_adapted(&[0.3, -0.2, 1.0, 0.5], 0.7).unwrap();
        assert!((z - 0.7).abs() < 1e-9);
        let (theta, rho) = cc.to_exponential(&x, z).unwrap();
        assert!((theta[2] - 1.0).abs() < 1e-12 && (rho - 0.7).abs() < 1e-9);
    }

    #[test]
    fn coordinate_change_scaling_and_rotation() {
        let spec = GroupSpec::heisenberg(1).unwrap();
        let base = PolynomialFrame::explicit_for(&spec);
        let mut doubled = base.clone();
        doubled.f0.0[0].value = 2.0;
        let c1 = coordinate_change(&base, 1e-5).unwrap();
        let c2 = coordinate_change(&doubled, 1e-5).unwrap();
        assert_eq!(c2.c, 2.0 * c1.c);
        assert_eq!(c2.b, c1.b);

        let th: f64 = 0.4;
        let (co, si) = (th.cos(), th.sin());
        let rotated = FnFrame {
            dim: 3,
            base_point: vec![0.0; 3],
            eval: move |i, q: &[f64]| {
                if i == 0 {
                    return base.field(0, q).unwrap();
                }
                let f1 = base.field(1, q).unwrap();
                let f2 = base.field(2, q).unwrap();
                let (w1, w2) = if i == 1 { (co, si) } else { (-si, co) };
                f1.iter().zip(&f2).map(|(a, b)| w1 * a + w2 * b).collect()
            },
        };
        let cr = coordinate_change(&rotated, 1e-5).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[co, -si, si, co]);
        assert!((&cr.b - &c1.b * q).amax() < 1e-12);
    }

    #[test]
    fn non_adapted_coordinates_are_rejected() {
        let frame = FnFrame {
            dim: 3,
            base_point: vec![0.0; 3],
            eval: |i: usize, q: &[f64]| match i {
                0 => vec![0.0, 0.0, 1.0],
                1 => vec![1.0, 0.0, 1.0 - 0.5 * q[1]],
                _ => vec![0.0, 1.0, 0.5 * q[0]],
            },
        };
        assert!(matches!(coordinate_change(&frame, 1e-5), Err(Error::DegenerateFrame(_))));
        assert!(structure_matrix(&frame, 1e-5).is_ok());
    }

    #[test]
    fn nilpotentize_heisenberg() {
        let frame = PolynomialFrame::explicit_for(&GroupSpec::heisenberg(2).unwrap());
        let res = nilpotentize(&frame, default_step(&frame), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(res.spec.mults(), &[2]);
        assert!(res.adapted_to_exp.is_some());
    }
}
