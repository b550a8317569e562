//! Reference-to-physical maps of the velocity, vorticity and stress spaces,
//! used to cross-check the direct construction of local bases.

use nalgebra::{DMatrix, DVector};

use super::dofs::Tabulation;
use super::element::ElementGeometry;
use crate::error::Result;
use crate::poly::{FieldShape, PolyField, Polynomial};

/// Affine change of variables `xi_ref = A xi + c` from `geom`'s local
/// coordinates to those of `reference`.
fn local_to_reference(geom: &ElementGeometry, reference: &ElementGeometry) -> ([[f64; 3]; 3], [f64; 3]) {
    let d = geom.dim;
    let finv = &geom.map.finv;
    let mut a = [[0.0; 3]; 3];
    let mut c = [0.0; 3];
    for i in 0..d {
        // xhat = F^{-1}(center + s xi - b)
        let mut off = 0.0;
        for j in 0..d {
            a[i][j] = finv[i][j] * geom.scale / reference.scale;
            off += finv[i][j] * (geom.center[j] - geom.map.b[j]);
        }
        c[i] = (off - reference.center[i]) / reference.scale;
    }
    (a, c)
}

fn pull_variables(f: &PolyField, a: &[[f64; 3]; 3], c: &[f64; 3], d: usize) -> Vec<Polynomial> {
    f.entries.iter().map(|p| p.compose_affine(a, c, d)).collect()
}

/// `sum_j L[i][j] v_j` entries for a constant matrix `l`.
fn left_mul(l: &[[f64; 3]; 3], m: &[Polynomial], d: usize, rows: usize) -> Vec<Polynomial> {
    let cols = m.len() / rows;
    let dim = m[0].dim();
    let mut out = vec![Polynomial::zero(dim); d * cols];
    for i in 0..d {
        for k in 0..cols {
            for j in 0..rows {
                out[i * cols + k] = out[i * cols + k].axpy(l[i][j], &m[j * cols + k]);
            }
        }
    }
    out
}

fn transpose(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Matrix field `L M R` for constant `L`, `R`.
fn sandwich(l: &[[f64; 3]; 3], m: &[Polynomial], r: &[[f64; 3]; 3], d: usize) -> PolyField {
    let lm = left_mul(l, m, d, d);
    // (L M) R = (R^T (L M)^T)^T
    let lmt: Vec<_> = (0..d * d).map(|k| lm[(k % d) * d + k / d].clone()).collect();
    let rt = transpose(r);
    let prod_t = left_mul(&rt, &lmt, d, d);
    PolyField::matrix(d, (0..d * d).map(|k| prod_t[(k % d) * d + k / d].clone()).collect())
}

/// Contravariant Piola map `det(F)^{-1} F v o phi^{-1}`.
pub fn piola(geom: &ElementGeometry, reference: &ElementGeometry, v: &PolyField) -> PolyField {
    let d = geom.dim;
    let (a, c) = local_to_reference(geom, reference);
    let pulled = pull_variables(v, &a, &c, d);
    let mapped = left_mul(&geom.map.f, &pulled, d, d);
    PolyField::new(FieldShape::Vector(d), mapped).scale(1.0 / geom.map.det)
}

/// Skew-preserving map `F^{-T} eta o phi^{-1} F^{-1}`.
pub fn skew_map(geom: &ElementGeometry, reference: &ElementGeometry, eta: &PolyField) -> PolyField {
    let d = geom.dim;
    let (a, c) = local_to_reference(geom, reference);
    let pulled = pull_variables(eta, &a, &c, d);
    sandwich(&transpose(&geom.map.finv), &pulled, &geom.map.finv, d)
}

/// Stress map `det(F)^{-1} F^{-T} sigma o phi^{-1} F^T`.
pub fn stress_map(geom: &ElementGeometry, reference: &ElementGeometry, sigma: &PolyField) -> PolyField {
    let d = geom.dim;
    let (a, c) = local_to_reference(geom, reference);
    let pulled = pull_variables(sigma, &a, &c, d);
    sandwich(&transpose(&geom.map.finv), &pulled, &transpose(&geom.map.f), d).scale(1.0 / geom.map.det)
}

/// Largest relative L2 residual of representing each of `b` in the span of `a`, and vice versa.
pub fn mutual_span_residual(geom: &ElementGeometry, a: &[PolyField], b: &[PolyField]) -> Result<f64> {
    Ok(span_residual(geom, a, b)?.max(span_residual(geom, b, a)?))
}

fn span_residual(geom: &ElementGeometry, basis: &[PolyField], targets: &[PolyField]) -> Result<f64> {
    let deg = basis.iter().chain(targets).map(|f| f.degree()).max().unwrap_or(0);
    let qp = geom.volume_points(2 * deg)?;
    let ncomp = basis[0].ncomp();
    let tb = Tabulation::new(basis, &qp.xi);
    let tt = Tabulation::new(targets, &qp.xi);
    let rows = qp.len() * ncomp;
    let mat = DMatrix::from_fn(rows, basis.len(), |r, j| qp.w[r / ncomp].sqrt() * tb.at(r / ncomp, j)[r % ncomp]);
    let svd = mat.clone().svd(true, true);
    let mut worst: f64 = 0.0;
    for t in 0..targets.len() {
        let rhs = DVector::from_fn(rows, |r, _| qp.w[r / ncomp].sqrt() * tt.at(r / ncomp, t)[r % ncomp]);
        let c = svd.solve(&rhs, 1e-13).expect("SVD computed with both factors");
        let res = (&mat * c - &rhs).norm() / rhs.norm();
        worst = worst.max(res);
    }
    Ok(worst)
}
