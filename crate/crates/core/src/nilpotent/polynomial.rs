//! Frames whose coefficients are polynomials, evaluated and differentiated exactly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FrameOracle;
use crate::error::{Error, Result};
use crate::model::GroupSpec;

/// `value · Π q_k^{monomial[k]}`, contributing to component `coord`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coord: usize,
    pub monomial: Vec<u32>,
    pub value: f64,
}

impl Term {
    fn eval(&self, q: &[f64]) -> f64 {
        self.monomial.iter().zip(q).fold(self.value, |acc, (&e, &x)| acc * x.powi(e as i32))
    }

    /// `∂/∂q_l` of the monomial.
    fn partial(&self, l: usize, q: &[f64]) -> f64 {
        let e = self.monomial[l];
        if e == 0 {
            return 0.0;
        }
        let mut acc = self.value * e as f64;
        for (k, (&ek, &x)) in self.monomial.iter().zip(q).enumerate() {
            let p = if k == l { ek - 1 } else { ek };
            acc *= x.powi(p as i32);
        }
        acc
    }
}

/// A vector field (or 1-form) given as a sum of monomial terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyField(pub Vec<Term>);

impl PolyField {
    pub fn eval(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        for t in &self.0 {
            out[t.coord] += t.eval(q);
        }
        out
    }

    /// Row `i`, column `l`: `∂ v_i / ∂ q_l`.
    pub fn jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        let d = q.len();
        let mut jac = DMatrix::zeros(d, d);
        for t in &self.0 {
            for l in 0..d {
                jac[(t.coord, l)] += t.partial(l, q);
            }
        }
        jac
    }

    fn validate(&self, dim: usize) -> Result<()> {
        for t in &self.0 {
            if t.coord >= dim {
                return Err(Error::DegenerateFrame(format!("coordinate {} out of range", t.coord)));
            }
            if t.monomial.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: t.monomial.len() });
            }
        }
        Ok(())
    }
}

/// A frame `f_1, …, f_{2n}, f_0` with polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFrame {
    pub dim: usize,
    pub fields: Vec<PolyField>,
    pub f0: PolyField,
    pub base_point: Vec<f64>,
}

impl PolynomialFrame {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 || self.dim.is_multiple_of(2) {
            return Err(Error::DegenerateFrame(format!("dimension {} is not 2n + 1", self.dim)));
        }
        if self.fields.len() != self.dim - 1 {
            return Err(Error::DimensionMismatch { expected: self.dim - 1, got: self.fields.len() });
        }
        if self.base_point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: self.base_point.len() });
        }
        for f in self.fields.iter().chain(std::iter::once(&self.f0)) {
            f.validate(self.dim)?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let frame: Self = serde_json::from_str(s).map_err(|e| Error::DegenerateFrame(e.to_string()))?;
        frame.validate()?;
        Ok(frame)
    }

    /// `f_i = ∂_{x_i} − ½ Σ_j A_ij x_j ∂_z`, `f_0 = ∂_z`, based at the origin.
    pub fn explicit(a: &DMatrix<f64>) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || !d.is_multiple_of(2) || d == 0 {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
        }
        let dim = d + 1;
        let unit = |k: Option<usize>| {
            let mut m = vec![0; dim];
            if let Some(k) = k {
                m[k] = 1;
            }
            m
        };
        let fields = (0..d)
            .map(|i| {
                let mut terms = vec![Term { coord: i, monomial: unit(None), value: 1.0 }];
                for j in 0..d {
                    if a[(i, j)] != 0.0 {
                        terms.push(Term { coord: d, monomial: unit(Some(j)), value: -0.5 * a[(i, j)] });
                    }
                }
                PolyField(terms)
            })
            .collect();
        let f0 = PolyField(vec![Term { coord: d, monomial: unit(None), value: 1.0 }]);
        Ok(Self { dim, fields, f0, base_point: vec![0.0; dim] })
    }

    /// The explicit representation of the group `spec`.
    pub fn explicit_for(spec: &GroupSpec) -> Self {
        let a = spec.dense_a();
        let d = spec.horizontal_dim();
        let m = DMatrix::from_fn(d, d, |i, j| a[i][j]);
        Self::explicit(&m).expect("square even matrix")
    }

    fn field_ref(&self, i: usize) -> &PolyField {
        if i == 0 {
            &self.f0
        } else {
            &self.fields[i - 1]
        }
    }
}

impl FrameOracle for PolynomialFrame {
    fn dim(&self) -> usize {
        self.dim
    }

    fn base_point(&self) -> Vec<f64> {
        self.base_point.clone()
    }

    fn field(&self, i: usize, q: &[f64]) -> Result<Vec<f64>> {
        if i > self.fields.len() {
            return Err(Error::DegenerateFrame(format!("no field with index {i}")));
        }
        Ok(self.field_ref(i).eval(q))
    }

    fn field_jacobian(&self, i: usize, q: &[f64]) -> Option<DMatrix<f64>> {
        (i <= self.fields.len()).then(|| self.field_ref(i).jacobian(q))
    }
}
