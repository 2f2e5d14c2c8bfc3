//! Contact Carnot groups in normal form, points and covectors in exponential
//! coordinates, the canonical skew matrix `A` and the non-homogeneous dilation.
//!
//! A group is fixed by its distinct singular values `α_1 < … < α_k` and their
//! multiplicities `n_1, …, n_k`. The horizontal layer is `ℝ^{2n}` split into
//! blocks of dimension `2 n_j`, on which `A` acts as `α_j J_{n_j}` with
//! `J_m = [[0, Id_m], [-Id_m, 0]]`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A contact Carnot group given by its singular values and multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    alphas: Vec<f64>,
    mults: Vec<usize>,
    /// Start of each horizontal block, plus the total `2n` at the end.
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawGroupSpec {
    alphas: Vec<f64>,
    mults: Vec<usize>,
}

impl GroupSpec {
    /// Validates `(α, n)` and builds the block offset table.
    pub fn new(alphas: Vec<f64>, mults: Vec<usize>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidSpec("no singular values".into()));
        }
        if alphas.len() != mults.len() {
            return Err(Error::InvalidSpec(format!(
                "{} singular values but {} multiplicities",
                alphas.len(),
                mults.len()
            )));
        }
        for (j, &a) in alphas.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::InvalidSpec(format!("alpha[{j}] = {a} is not positive")));
            }
        }
        for w in alphas.windows(2) {
            if w[1] == w[0] {
                return Err(Error::InvalidSpec(format!("duplicate singular value {}", w[0])));
            }
            if w[1] < w[0] {
                return Err(Error::InvalidSpec(format!(
                    "singular values not increasing ({} before {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(j) = mults.iter().position(|&m| m == 0) {
            return Err(Error::InvalidSpec(format!("mult[{j}] is zero")));
        }
        let mut offsets = Vec::with_capacity(mults.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &m in &mults {
            acc += 2 * m;
            offsets.push(acc);
        }
        Ok(Self { alphas, mults, offsets })
    }

    /// The Heisenberg group `ℍ_{2n+1}`: one singular value `1` of multiplicity `n`.
    pub fn heisenberg(n: usize) -> Result<Self> {
        Self::new(vec![1.0], vec![n])
    }

    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.alphas[j]
    }

    pub fn alpha_min(&self) -> f64 {
        self.alphas[0]
    }

    pub fn alpha_max(&self) -> f64 {
        self.alphas[self.alphas.len() - 1]
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    /// `n = Σ n_j`.
    pub fn n(&self) -> usize {
        self.mults.iter().sum()
    }

    /// Dimension of the horizontal layer, `2n`.
    pub fn horizontal_dim(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    /// Dimension of the group, `2n + 1`.
    pub fn dim(&self) -> usize {
        self.horizontal_dim() + 1
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Index range of block `j` inside a flat horizontal vector.
    pub fn block_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Returns a spec with every singular value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.alphas.iter().map(|a| a * c).collect(), self.mults.clone())
    }

    /// `A·v`, computed blockwise as `α_j J v_j`.
    pub fn apply_a(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.horizontal_dim(), v.len())?;
        let mut out = vec![0.0; v.len()];
        for j in 0..self.k() {
            let r = self.block_range(j);
            apply_j_scaled(self.alphas[j], &v[r.clone()], &mut out[r]);
        }
        Ok(out)
    }

    /// Dense row-major `A`, for callers that need the full matrix.
    pub fn dense_a(&self) -> Vec<Vec<f64>> {
        let d = self.horizontal_dim();
        let mut a = vec![vec![0.0; d]; d];
        for j in 0..self.k() {
            let off = self.offsets[j];
            let m = self.mults[j];
            for i in 0..m {
                a[off + i][off + m + i] = self.alphas[j];
                a[off + m + i][off + i] = -self.alphas[j];
            }
        }
        a
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawGroupSpec { alphas: self.alphas.clone(), mults: self.mults.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGroupSpec::deserialize(d)?;
        GroupSpec::new(raw.alphas, raw.mults).map_err(serde::de::Error::custom)
    }
}

/// `out = α J v` for one block; `J` swaps the halves and negates the lower one.
pub(crate) fn apply_j_scaled(alpha: f64, v: &[f64], out: &mut [f64]) {
    let m = v.len() / 2;
    for i in 0..m {
        out[i] = alpha * v[m + i];
        out[m + i] = -alpha * v[i];
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// A horizontal vector stored contiguously, with the block boundaries of its
/// owning [`GroupSpec`]. Serialized as a list of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVec {
    data: Vec<f64>,
    offsets: Vec<usize>,
}

impl BlockVec {
    pub fn zeros(spec: &GroupSpec) -> Self {
        Self { data: vec![0.0; spec.horizontal_dim()], offsets: spec.offsets.clone() }
    }

    pub fn from_flat(spec: &GroupSpec, data: Vec<f64>) -> Result<Self> {
        check_len(spec.horizontal_dim(), data.len())?;
        Ok(Self { data, offsets: spec.offsets.clone() })
    }

    pub fn from_blocks(spec: &GroupSpec, blocks: &[Vec<f64>]) -> Result<Self> {
        check_len(spec.k(), blocks.len())?;
        let mut data = Vec::with_capacity(spec.horizontal_dim());
        for (j, b) in blocks.iter().enumerate() {
            check_len(2 * spec.mults[j], b.len())?;
            data.extend_from_slice(b);
        }
        Ok(Self { data, offsets: spec.offsets.clone() })
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.data[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.num_blocks()).map(move |j| self.block(j))
    }

    pub fn block_norm_sq(&self, j: usize) -> f64 {
        self.block(j).iter().map(|v| v * v).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Checks that the block layout agrees with `spec`.
    pub fn check_layout(&self, spec: &GroupSpec) -> Result<()> {
        check_len(spec.k(), self.num_blocks())?;
        for j in 0..spec.k() {
            check_len(2 * spec.mults[j], self.block(j).len())?;
        }
        Ok(())
    }

    fn scaled(&self, c: f64) -> Self {
        Self { data: self.data.iter().map(|v| v * c).collect(), offsets: self.offsets.clone() }
    }

    fn to_nested(&self) -> Vec<Vec<f64>> {
        self.blocks().map(<[f64]>::to_vec).collect()
    }

    fn from_nested(blocks: Vec<Vec<f64>>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut data = Vec::new();
        offsets.push(0);
        for b in blocks {
            data.extend(b);
            offsets.push(data.len());
        }
        Self { data, offsets }
    }
}

impl Serialize for BlockVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Self::from_nested(Vec::<Vec<f64>>::deserialize(d)?))
    }
}

/// A point `(x_1, …, x_k, z)` in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    #[serde(rename = "blocks")]
    pub x: BlockVec,
    pub z: f64,
}

impl Point {
    pub fn new(spec: &GroupSpec, blocks: &[Vec<f64>], z: f64) -> Result<Self> {
        Ok(Self { x: BlockVec::from_blocks(spec, blocks)?, z })
    }

    pub fn from_flat(spec: &GroupSpec, x: Vec<f64>, z: f64) -> Result<Self> {
        Ok(Self { x: BlockVec::from_flat(spec, x)?, z })
    }

    pub fn origin(spec: &GroupSpec) -> Self {
        Self { x: BlockVec::zeros(spec), z: 0.0 }
    }

    pub fn is_origin(&self) -> bool {
        self.z == 0.0 && self.x.is_zero()
    }

    /// Euclidean norm of `(x, z)`.
    pub fn norm(&self) -> f64 {
        (self.x.norm_sq() + self.z * self.z).sqrt()
    }

    /// Euclidean distance between two points with the same layout.
    pub fn distance(&self, other: &Point) -> f64 {
        let dx: f64 = self.x.as_slice().iter().zip(other.x.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        (dx + (self.z - other.z).powi(2)).sqrt()
    }

    /// `|z| / ‖x‖²`; infinite when `x = 0` and `z ≠ 0`.
    pub fn ratio(&self) -> f64 {
        self.z.abs() / self.x.norm_sq()
    }
}

/// Non-homogeneous dilation `δ_ε(x, z) = (ε x, ε² z)`.
pub fn dilate(p: &Point, eps: f64) -> Result<Point> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::NonPositiveEps(eps));
    }
    Ok(Point { x: p.x.scaled(eps), z: p.z * eps * eps })
}

/// An initial covector `(u_1, …, u_k, λ)` of a normal geodesic from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    #[serde(rename = "blocks")]
    pub u: BlockVec,
    pub lambda: f64,
}

impl Covector {
    pub fn new(spec: &GroupSpec, blocks: &[Vec<f64>], lambda: f64) -> Result<Self> {
        Ok(Self { u: BlockVec::from_blocks(spec, blocks)?, lambda })
    }

    pub fn from_flat(spec: &GroupSpec, u: Vec<f64>, lambda: f64) -> Result<Self> {
        Ok(Self { u: BlockVec::from_flat(spec, u)?, lambda })
    }

    /// The covector `(t u, t λ)`; its geodesic at time 1 is the original one at time `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self { u: self.u.scaled(t), lambda: self.lambda * t }
    }
}
