//! Moment degrees of freedom and dual bases by Vandermonde inversion.

use nalgebra::DMatrix;

use super::element::{ElementGeometry, QuadPoints};
use crate::error::{McsError, Result};
use crate::mesh::Point;
use crate::poly::monomial::table;
use crate::poly::{FieldShape, PolyField, Polynomial};

/// Values of a family of fields at a point set, laid out `[q][field][comp]`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub nfun: usize,
    pub ncomp: usize,
    pub npts: usize,
    pub data: Vec<f64>,
}

impl Tabulation {
    pub fn new(fields: &[PolyField], pts: &[Point]) -> Self {
        let nfun = fields.len();
        let ncomp = fields.first().map_or(0, |f| f.ncomp());
        let npts = pts.len();
        let mut data = vec![0.0; npts * nfun * ncomp];
        if nfun == 0 {
            return Self { nfun, ncomp, npts, data };
        }
        let dim = fields[0].dim();
        let nmon = fields.iter().map(|f| f.len()).max().unwrap_or(0);
        let t = table(dim);
        let mut mono = Vec::with_capacity(nmon);
        for (q, x) in pts.iter().enumerate() {
            t.values(&x[..dim], nmon, &mut mono);
            for (i, f) in fields.iter().enumerate() {
                let off = (q * nfun + i) * ncomp;
                f.eval_with(&mono, &mut data[off..off + ncomp]);
            }
        }
        Self { nfun, ncomp, npts, data }
    }

    #[inline]
    pub fn at(&self, q: usize, i: usize) -> &[f64] {
        let off = (q * self.nfun + i) * self.ncomp;
        &self.data[off..off + self.ncomp]
    }
}

/// A single moment functional `f -> sum_q sum_c f_c(x_q) test[q * ncomp + c]`.
#[derive(Clone, Debug)]
pub struct Dof {
    pub set: usize,
    pub test: Vec<f64>,
}

/// Moment functionals on one element, grouped by the point set they use.
/// Point set 0 is the volume, set `1 + i` is local facet `i`.
#[derive(Clone, Debug)]
pub struct DofSet {
    pub ncomp: usize,
    pub sets: Vec<QuadPoints>,
    pub dofs: Vec<Dof>,
}

impl DofSet {
    pub fn new(geom: &ElementGeometry, ncomp: usize, degree: usize) -> Result<Self> {
        let mut sets = vec![geom.volume_points(degree)?];
        for i in 0..=geom.dim {
            sets.push(geom.facet_points(i, degree)?);
        }
        Ok(Self { ncomp, sets, dofs: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Facet moments `(1/|F|) int_F (c . f) r ds` for each constant component
    /// pattern `c` and each facet monomial `r` of degree `<= degree`, `r` outermost.
    pub fn add_facet_moments(&mut self, geom: &ElementGeometry, facet: usize, patterns: &[Vec<f64>], degree: usize) {
        let fd = geom.dim - 1;
        let t = table(fd);
        let nr = t.count(degree);
        let set = 1 + facet;
        let qp = &self.sets[set];
        let inv_area = 1.0 / geom.facets[facet].area;
        let mut mono = Vec::new();
        let mut rvals = vec![0.0; qp.len() * nr];
        for q in 0..qp.len() {
            t.values(&qp.mu[q][..fd], nr, &mut mono);
            rvals[q * nr..(q + 1) * nr].copy_from_slice(&mono);
        }
        for j in 0..nr {
            for pat in patterns {
                let mut test = vec![0.0; qp.len() * self.ncomp];
                for q in 0..qp.len() {
                    let s = qp.w[q] * inv_area * rvals[q * nr + j];
                    for c in 0..self.ncomp {
                        test[q * self.ncomp + c] = s * pat[c];
                    }
                }
                self.dofs.push(Dof { set, test });
            }
        }
    }

    /// Volume moments `(1/|T|) int_T f . g dx` for each test field `g` (in `xi`).
    pub fn add_volume_moments(&mut self, geom: &ElementGeometry, tests: &[PolyField]) {
        let qp = &self.sets[0];
        let tab = Tabulation::new(tests, &qp.xi);
        let inv_vol = 1.0 / geom.volume;
        for i in 0..tests.len() {
            let mut test = vec![0.0; qp.len() * self.ncomp];
            for q in 0..qp.len() {
                let s = qp.w[q] * inv_vol;
                for (c, v) in tab.at(q, i).iter().enumerate() {
                    test[q * self.ncomp + c] = s * v;
                }
            }
            self.dofs.push(Dof { set: 0, test });
        }
    }

    /// Matrix `V[i][j] = dof_i(fields_j)` for fields given in `xi`.
    pub fn vandermonde(&self, fields: &[PolyField]) -> DMatrix<f64> {
        let tabs: Vec<Tabulation> = self.sets.iter().map(|s| Tabulation::new(fields, &s.xi)).collect();
        DMatrix::from_fn(self.dofs.len(), fields.len(), |i, j| {
            let d = &self.dofs[i];
            let tab = &tabs[d.set];
            let mut acc = 0.0;
            for q in 0..tab.npts {
                let v = tab.at(q, j);
                for c in 0..self.ncomp {
                    acc += d.test[q * self.ncomp + c] * v[c];
                }
            }
            acc
        })
    }

    /// Applies every functional to a field given in physical coordinates.
    pub fn apply_physical(&self, f: &PolyField) -> Vec<f64> {
        let vals: Vec<Vec<Vec<f64>>> =
            self.sets.iter().map(|s| s.x.iter().map(|x| f.eval(&x[..f.dim()])).collect()).collect();
        self.dofs
            .iter()
            .map(|d| {
                let v = &vals[d.set];
                let mut acc = 0.0;
                for (q, vq) in v.iter().enumerate() {
                    for c in 0..self.ncomp {
                        acc += d.test[q * self.ncomp + c] * vq[c];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Linear combination `sum_j c[j] fields[j]`.
pub fn lincomb(fields: &[PolyField], c: &[f64]) -> PolyField {
    let shape = fields[0].shape;
    let dim = fields[0].dim();
    let ncomp = shape.ncomp();
    let len = fields.iter().map(|f| f.len()).max().unwrap_or(0);
    let mut acc = vec![vec![0.0; len]; ncomp];
    for (f, &cj) in fields.iter().zip(c) {
        if cj == 0.0 {
            continue;
        }
        for (a, p) in acc.iter_mut().zip(&f.entries) {
            for (ai, pi) in a.iter_mut().zip(p.coeffs()) {
                *ai += cj * pi;
            }
        }
    }
    PolyField::new(shape, acc.into_iter().map(|a| Polynomial::from_coeffs(dim, a)).collect())
}

/// Basis of `span(fields)` dual to `dofs`, by inverting the generalized Vandermonde matrix.
pub fn dual_basis(fields: &[PolyField], dofs: &DofSet, space: &'static str, element: usize) -> Result<Vec<PolyField>> {
    let n = fields.len();
    if dofs.len() != n {
        return Err(McsError::Shape(format!("{space}: {} functionals for {n} spanning fields", dofs.len())));
    }
    let v = dofs.vandermonde(fields);
    let lu = v.full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio > 1e-12) {
        return Err(McsError::SingularVandermonde { space, element, ratio });
    }
    let inv = lu.try_inverse().ok_or(McsError::SingularVandermonde { space, element, ratio })?;
    Ok((0..n).map(|i| lincomb(fields, inv.column(i).as_slice())).collect())
}

/// Greedy selection of a maximal linearly independent subfamily (by coefficients).
pub fn independent_subset(fields: Vec<PolyField>, tol: f64) -> Vec<PolyField> {
    let len = fields.iter().map(|f| f.len()).max().unwrap_or(0);
    let flat = |f: &PolyField| -> Vec<f64> {
        let mut v = Vec::with_capacity(len * f.ncomp());
        for p in &f.entries {
            let mut c = p.coeffs().to_vec();
            c.resize(len, 0.0);
            v.extend(c);
        }
        v
    };
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for f in fields {
        let mut v = flat(&f);
        let n0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for o in &ortho {
            let d: f64 = v.iter().zip(o).map(|(a, b)| a * b).sum();
            for (a, b) in v.iter_mut().zip(o) {
                *a -= d * b;
            }
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > tol * n0.max(f64::MIN_POSITIVE) {
            ortho.push(v.iter().map(|a| a / n).collect());
            keep.push(f);
        }
    }
    keep
}

/// Constant vector fields `e_c * m` for all monomials `m` of degree `<= degree`, component innermost.
pub fn vector_monomials(dim: usize, degree: usize) -> Vec<PolyField> {
    let t = table(dim);
    let mut out = Vec::new();
    for i in 0..t.count(degree) {
        for c in 0..dim {
            let mut entries = vec![Polynomial::zero(dim); dim];
            entries[c] = Polynomial::monomial(dim, t.exps[i], 1.0);
            out.push(PolyField::new(FieldShape::Vector(dim), entries));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_subset_drops_combinations() {
        let x = Polynomial::coordinate(2, 0);
        let y = Polynomial::coordinate(2, 1);
        let f = vec![PolyField::scalar(x.clone()), PolyField::scalar(y.clone()), PolyField::scalar(x.axpy(2.0, &y))];
        assert_eq!(independent_subset(f, 1e-10).len(), 2);
    }

    #[test]
    fn lincomb_matches_axpy() {
        let f = vector_monomials(2, 1);
        let c = [1.0, -2.0, 0.5, 0.0, 3.0, 1.5];
        let direct = f.iter().zip(&c).fold(PolyField::zero(FieldShape::Vector(2), 2), |acc, (g, &a)| acc.axpy(a, g));
        assert_eq!(lincomb(&f, &c), direct);
    }
}
