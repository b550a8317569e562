//! Scalar, vector and matrix polynomial fields and the differential
//! operators of the mixed-stress Stokes formulation.

use super::Polynomial;
use crate::error::{McsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldShape {
    Scalar,
    Vector(usize),
    /// Square `n x n` matrix, stored row-major.
    Matrix(usize),
}

impl FieldShape {
    pub fn ncomp(self) -> usize {
        match self {
            FieldShape::Scalar => 1,
            FieldShape::Vector(n) => n,
            FieldShape::Matrix(n) => n * n,
        }
    }
}

/// The different meanings of `curl` in two and three dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurlKind {
    /// 2D scalar to vector: `(-d2 f, d1 f)`.
    ScalarToVector2d,
    /// 2D vector to scalar: `-d2 f1 + d1 f2`.
    VectorToScalar2d,
    /// 2D vector to matrix: rows `(d2 f_i, -d1 f_i)`.
    VectorToMatrix2d,
    /// 3D vector curl.
    Vector3d,
    /// Matrix field, curl applied to each row (2D rows use the vector to scalar curl).
    RowWise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyField {
    pub shape: FieldShape,
    pub entries: Vec<Polynomial>,
}

impl PolyField {
    pub fn new(shape: FieldShape, entries: Vec<Polynomial>) -> Self {
        assert_eq!(shape.ncomp(), entries.len(), "entry count does not match {shape:?}");
        let dim = entries[0].dim();
        assert!(entries.iter().all(|p| p.dim() == dim), "mixed polynomial dimensions");
        Self { shape, entries }
    }

    pub fn scalar(p: Polynomial) -> Self {
        Self::new(FieldShape::Scalar, vec![p])
    }

    pub fn vector(entries: Vec<Polynomial>) -> Self {
        let n = entries.len();
        Self::new(FieldShape::Vector(n), entries)
    }

    pub fn matrix(n: usize, entries: Vec<Polynomial>) -> Self {
        Self::new(FieldShape::Matrix(n), entries)
    }

    pub fn zero(shape: FieldShape, dim: usize) -> Self {
        Self::new(shape, vec![Polynomial::zero(dim); shape.ncomp()])
    }

    /// Constant matrix field.
    pub fn constant_matrix(dim: usize, m: &[[f64; 3]; 3], n: usize) -> Self {
        let entries = (0..n * n).map(|k| Polynomial::constant(dim, m[k / n][k % n])).collect();
        Self::matrix(n, entries)
    }

    /// Number of variables of the entries.
    pub fn dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub fn ncomp(&self) -> usize {
        self.entries.len()
    }

    pub fn degree(&self) -> usize {
        self.entries.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Longest coefficient vector over the entries.
    pub fn len(&self) -> usize {
        self.entries.iter().map(|p| p.len()).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        match self.shape {
            FieldShape::Matrix(n) => &self.entries[i * n + j],
            _ => panic!("entry(i, j) on a non-matrix field"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|p| p.eval(x)).collect()
    }

    pub fn eval_with(&self, monomials: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.entries) {
            *o = p.eval_with(monomials);
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::new(self.shape, self.entries.iter().map(|p| p.scale(a)).collect())
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "field shape mismatch");
        Self::new(self.shape, self.entries.iter().zip(&other.entries).map(|(p, q)| p.axpy(a, q)).collect())
    }

    /// Multiplies every component by a scalar polynomial.
    pub fn mul_scalar(&self, s: &Polynomial) -> Self {
        Self::new(self.shape, self.entries.iter().map(|p| p.mul(s)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|p| p.is_zero())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, p| m.max(p.max_abs_coeff()))
    }

    fn matrix_size(&self) -> Result<usize> {
        match self.shape {
            FieldShape::Matrix(n) => Ok(n),
            s => Err(McsError::Shape(format!("expected a matrix field, got {s:?}"))),
        }
    }

    fn vector_size(&self) -> Result<usize> {
        match self.shape {
            FieldShape::Vector(n) => Ok(n),
            s => Err(McsError::Shape(format!("expected a vector field, got {s:?}"))),
        }
    }

    pub fn transpose(&self) -> Result<Self> {
        let n = self.matrix_size()?;
        Ok(Self::matrix(n, (0..n * n).map(|k| self.entries[(k % n) * n + k / n].clone()).collect()))
    }

    pub fn trace(&self) -> Result<Polynomial> {
        let n = self.matrix_size()?;
        Ok((1..n).fold(self.entries[0].clone(), |acc, i| acc.axpy(1.0, &self.entries[i * n + i])))
    }

    /// Matrix product of two matrix fields.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let n = self.matrix_size()?;
        if other.matrix_size()? != n {
            return Err(McsError::Shape("matrix size mismatch in product".into()));
        }
        let dim = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Polynomial::zero(dim);
                for l in 0..n {
                    acc = acc.axpy(1.0, &self.entries[i * n + l].mul(&other.entries[l * n + j]));
                }
                entries.push(acc);
            }
        }
        Ok(Self::matrix(n, entries))
    }

    /// Pointwise Frobenius product `A : B` (or dot product for vectors).
    pub fn inner(&self, other: &Self) -> Result<Polynomial> {
        if self.shape != other.shape {
            return Err(McsError::Shape("shape mismatch in inner product".into()));
        }
        let mut acc = Polynomial::zero(self.dim());
        for (p, q) in self.entries.iter().zip(&other.entries) {
            acc = acc.axpy(1.0, &p.mul(q));
        }
        Ok(acc)
    }
}

/// Deviatoric part `m - tr(m)/n Id`.
pub fn dev(m: &PolyField) -> Result<PolyField> {
    let n = m.matrix_size()?;
    let tr = m.trace()?;
    let mut entries = m.entries.clone();
    for i in 0..n {
        entries[i * n + i] = entries[i * n + i].axpy(-1.0 / n as f64, &tr);
    }
    Ok(PolyField::matrix(n, entries))
}

/// Deviatoric part of a constant matrix.
pub fn dev_value(m: &[f64], n: usize) -> Vec<f64> {
    let tr: f64 = (0..n).map(|i| m[i * n + i]).sum();
    let mut out = m.to_vec();
    for i in 0..n {
        out[i * n + i] -= tr / n as f64;
    }
    out
}

/// Skew-symmetric matrix from its `d(d-1)/2` independent components, including the factor 1/2.
pub fn kappa(v: &PolyField) -> Result<PolyField> {
    match v.shape {
        FieldShape::Scalar => {
            let w = v.entries[0].scale(0.5);
            let z = Polynomial::zero(w.dim());
            Ok(PolyField::matrix(2, vec![z.clone(), w.scale(-1.0), w, z]))
        }
        FieldShape::Vector(3) => {
            let h: Vec<Polynomial> = v.entries.iter().map(|p| p.scale(0.5)).collect();
            let z = Polynomial::zero(h[0].dim());
            Ok(PolyField::matrix(
                3,
                vec![
                    z.clone(),
                    h[2].scale(-1.0),
                    h[1].clone(),
                    h[2].clone(),
                    z.clone(),
                    h[0].scale(-1.0),
                    h[1].scale(-1.0),
                    h[0].clone(),
                    z,
                ],
            ))
        }
        s => Err(McsError::Shape(format!("kappa expects a scalar or a 3-vector, got {s:?}"))),
    }
}

/// Inverse of [`kappa`] on the skew part: returns the independent components.
pub fn kappa_inv_value(m: &[f64], n: usize) -> Vec<f64> {
    match n {
        2 => vec![m[2] - m[1]],
        3 => vec![m[7] - m[5], m[2] - m[6], m[3] - m[1]],
        _ => panic!("kappa is defined for 2x2 and 3x3 matrices"),
    }
}

/// Gradient: scalar to vector, or vector to matrix with `[grad f]_ij = d_j f_i`.
pub fn grad(f: &PolyField) -> Result<PolyField> {
    let dim = f.dim();
    match f.shape {
        FieldShape::Scalar => Ok(PolyField::vector((0..dim).map(|j| f.entries[0].diff(j)).collect())),
        FieldShape::Vector(n) if n == dim => {
            let mut entries = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    entries.push(f.entries[i].diff(j));
                }
            }
            Ok(PolyField::matrix(n, entries))
        }
        s => Err(McsError::Shape(format!("grad undefined for {s:?} in {dim} variables"))),
    }
}

/// Divergence of a vector field, or row-wise divergence of a matrix field.
pub fn div(f: &PolyField) -> Result<PolyField> {
    let dim = f.dim();
    match f.shape {
        FieldShape::Vector(n) if n == dim => {
            let mut acc = Polynomial::zero(dim);
            for i in 0..n {
                acc = acc.axpy(1.0, &f.entries[i].diff(i));
            }
            Ok(PolyField::scalar(acc))
        }
        FieldShape::Matrix(n) if n == dim => Ok(PolyField::vector(
            (0..n)
                .map(|i| (0..n).fold(Polynomial::zero(dim), |acc, j| acc.axpy(1.0, &f.entries[i * n + j].diff(j))))
                .collect(),
        )),
        s => Err(McsError::Shape(format!("div undefined for {s:?} in {dim} variables"))),
    }
}

/// Symmetric gradient `(grad u + grad u^T) / 2`.
pub fn eps(u: &PolyField) -> Result<PolyField> {
    u.vector_size()?;
    let g = grad(u)?;
    let gt = g.transpose()?;
    Ok(g.axpy(1.0, &gt).scale(0.5))
}

/// Skew part `(m - m^T) / 2`.
pub fn skew(m: &PolyField) -> Result<PolyField> {
    let t = m.transpose()?;
    Ok(m.axpy(-1.0, &t).scale(0.5))
}

pub fn curl(f: &PolyField, kind: CurlKind) -> Result<PolyField> {
    let dim = f.dim();
    let mismatch = || McsError::Shape(format!("curl {kind:?} does not apply to {:?} in {dim} variables", f.shape));
    match kind {
        CurlKind::ScalarToVector2d => {
            if f.shape != FieldShape::Scalar || dim != 2 {
                return Err(mismatch());
            }
            let p = &f.entries[0];
            Ok(PolyField::vector(vec![p.diff(1).scale(-1.0), p.diff(0)]))
        }
        CurlKind::VectorToScalar2d => {
            if f.shape != FieldShape::Vector(2) || dim != 2 {
                return Err(mismatch());
            }
            Ok(PolyField::scalar(f.entries[1].diff(0).axpy(-1.0, &f.entries[0].diff(1))))
        }
        CurlKind::VectorToMatrix2d => {
            if f.shape != FieldShape::Vector(2) || dim != 2 {
                return Err(mismatch());
            }
            let e = &f.entries;
            Ok(PolyField::matrix(
                2,
                vec![e[0].diff(1), e[0].diff(0).scale(-1.0), e[1].diff(1), e[1].diff(0).scale(-1.0)],
            ))
        }
        CurlKind::Vector3d => {
            if f.shape != FieldShape::Vector(3) || dim != 3 {
                return Err(mismatch());
            }
            let e = &f.entries;
            Ok(PolyField::vector(vec![
                e[2].diff(1).axpy(-1.0, &e[1].diff(2)),
                e[0].diff(2).axpy(-1.0, &e[2].diff(0)),
                e[1].diff(0).axpy(-1.0, &e[0].diff(1)),
            ]))
        }
        CurlKind::RowWise => {
            let n = f.matrix_size().map_err(|_| mismatch())?;
            if n != dim {
                return Err(mismatch());
            }
            let rows: Vec<PolyField> =
                (0..n).map(|i| PolyField::vector(f.entries[i * n..(i + 1) * n].to_vec())).collect();
            if n == 2 {
                let mut out = Vec::with_capacity(2);
                for r in &rows {
                    out.push(curl(r, CurlKind::VectorToScalar2d)?.entries.remove(0));
                }
                Ok(PolyField::vector(out))
            } else {
                let mut out = Vec::with_capacity(9);
                for r in &rows {
                    out.extend(curl(r, CurlKind::Vector3d)?.entries);
                }
                Ok(PolyField::matrix(3, out))
            }
        }
    }
}
