//! Local shape functions of every space, written in the element's `xi` coordinates.

use nalgebra::{DMatrix, SymmetricEigen};

use super::dofs::{dual_basis, independent_subset, vector_monomials, DofSet, Tabulation};
use super::element::ElementGeometry;
use crate::error::{McsError, Result};
use crate::mesh::Point;
use crate::poly::monomial::{homogeneous, table};
use crate::poly::{curl, dev, dev_value, CurlKind, PolyField, Polynomial};

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scalar_monomial(dim: usize, i: usize) -> Polynomial {
    Polynomial::monomial(dim, table(dim).exps[i], 1.0)
}

/// Spanning set of `RT^k`: vector monomials of degree `<= k` plus `xi * m` for homogeneous `m` of degree `k`.
pub fn rt_spanning(dim: usize, k: usize) -> Vec<PolyField> {
    let mut out = vector_monomials(dim, k);
    for i in homogeneous(dim, k) {
        let m = scalar_monomial(dim, i);
        out.push(PolyField::vector((0..dim).map(|a| Polynomial::coordinate(dim, a).mul(&m)).collect()));
    }
    out
}

/// Normal facet moments against `P^facet_degree(F)` and interior moments against `tests`.
fn hdiv_dofs(geom: &ElementGeometry, facet_degree: usize, tests: &[PolyField], quad: usize) -> Result<DofSet> {
    let dim = geom.dim;
    let mut dofs = DofSet::new(geom, dim, quad)?;
    for i in 0..=dim {
        let n = geom.facets[i].normal;
        dofs.add_facet_moments(geom, i, &[n[..dim].to_vec()], facet_degree);
    }
    dofs.add_volume_moments(geom, tests);
    Ok(dofs)
}

/// Degrees of freedom of `RT^k` with quadrature exact to `quad`.
pub fn rt_dofs(geom: &ElementGeometry, k: usize, quad: usize) -> Result<DofSet> {
    let tests = if k >= 1 { vector_monomials(geom.dim, k - 1) } else { Vec::new() };
    hdiv_dofs(geom, k, &tests, quad)
}

pub fn rt_local_basis(geom: &ElementGeometry, k: usize) -> Result<Vec<PolyField>> {
    let dofs = rt_dofs(geom, k, 2 * k + 1)?;
    dual_basis(&rt_spanning(geom.dim, k), &dofs, "velocity_RT", geom.index)
}

/// Nedelec space of the first kind `P^{m-1} + S^m`, given by an independent spanning family.
pub fn nedelec_first_kind(dim: usize, m: usize) -> Vec<PolyField> {
    let mut out = if m >= 1 { vector_monomials(dim, m - 1) } else { Vec::new() };
    if m == 0 {
        return out;
    }
    let x = |a| Polynomial::coordinate(dim, a);
    for i in homogeneous(dim, m - 1) {
        let q = scalar_monomial(dim, i);
        if dim == 2 {
            out.push(PolyField::vector(vec![x(1).mul(&q).scale(-1.0), x(0).mul(&q)]));
        } else {
            for c in 0..3 {
                // x cross (e_c q)
                let mut v = vec![Polynomial::zero(3); 3];
                let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                v[b] = x(a).mul(&q);
                v[a] = x(b).mul(&q).scale(-1.0);
                out.push(PolyField::vector(v));
            }
        }
    }
    independent_subset(out, 1e-10)
}

pub fn bdm_dofs(geom: &ElementGeometry, order: usize, quad: usize) -> Result<DofSet> {
    hdiv_dofs(geom, order, &nedelec_first_kind(geom.dim, order - 1), quad)
}

pub fn bdm_local_basis(geom: &ElementGeometry, order: usize) -> Result<Vec<PolyField>> {
    let dofs = bdm_dofs(geom, order, 2 * order)?;
    dual_basis(&vector_monomials(geom.dim, order), &dofs, "velocity_BDM", geom.index)
}

fn outer(a: &Point, b: &Point, n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = a[i] * b[j];
        }
    }
    m
}

/// The trace-free basis matrices built from barycentric gradients, normalized in Frobenius norm.
pub fn s_matrices(geom: &ElementGeometry) -> Vec<Vec<f64>> {
    let d = geom.dim;
    let g = &geom.grad_lambda;
    let mut out = Vec::new();
    if d == 2 {
        for i in 0..3 {
            let c = g[(i + 2) % 3];
            out.push(dev_value(&outer(&g[(i + 1) % 3], &[-c[1], c[0], 0.0], 2), 2));
        }
    } else {
        for i in 0..4 {
            out.push(dev_value(&outer(&g[(i + 1) % 4], &cross(&g[(i + 2) % 4], &g[(i + 3) % 4]), 3), 3));
        }
        for i in 0..4 {
            out.push(dev_value(&outer(&g[(i + 2) % 4], &cross(&g[(i + 3) % 4], &g[(i + 1) % 4]), 3), 3));
        }
    }
    for m in &mut out {
        let n = m.iter().map(|a| a * a).sum::<f64>().sqrt();
        m.iter_mut().for_each(|a| *a /= n);
    }
    out
}

/// `xi^alpha S_j` for `|alpha| <= degree`, monomial outermost.
fn monomial_times_matrices(dim: usize, degree: usize, mats: &[Vec<f64>]) -> Vec<PolyField> {
    let t = table(dim);
    let mut out = Vec::new();
    for i in 0..t.count(degree) {
        let m = scalar_monomial(dim, i);
        for s in mats {
            out.push(PolyField::matrix(dim, s.iter().map(|&a| m.scale(a)).collect()));
        }
    }
    out
}

pub fn stress_spanning(geom: &ElementGeometry, k: usize) -> Vec<PolyField> {
    monomial_times_matrices(geom.dim, k, &s_matrices(geom))
}

/// Facet nt-moments in the global tangent frame and interior moments against `P^{k-1}(T, D)`.
pub fn stress_dofs(geom: &ElementGeometry, k: usize, quad: usize) -> Result<DofSet> {
    let d = geom.dim;
    let mut dofs = DofSet::new(geom, d * d, quad)?;
    for i in 0..=d {
        let f = &geom.facets[i];
        let patterns: Vec<Vec<f64>> = f.tangents.iter().map(|t| outer(t, &f.normal, d)).collect();
        dofs.add_facet_moments(geom, i, &patterns, k);
    }
    if k >= 1 {
        dofs.add_volume_moments(geom, &monomial_times_matrices(d, k - 1, &s_matrices(geom)));
    }
    Ok(dofs)
}

pub fn stress_local_basis(geom: &ElementGeometry, k: usize) -> Result<Vec<PolyField>> {
    let dofs = stress_dofs(geom, k, 2 * k)?;
    dual_basis(&stress_spanning(geom, k), &dofs, "stress_MCS", geom.index)
}

/// The cubic matrix bubble (scalar bubble times identity in 2D).
pub fn matrix_bubble(geom: &ElementGeometry) -> PolyField {
    let d = geom.dim;
    let lam: Vec<Polynomial> = (0..=d).map(|i| geom.lambda(i)).collect();
    if d == 2 {
        let b = lam[0].mul(&lam[1]).mul(&lam[2]);
        let z = Polynomial::zero(2);
        PolyField::matrix(2, vec![b.clone(), z.clone(), z, b])
    } else {
        let mut entries = vec![Polynomial::zero(3); 9];
        for i in 0..4 {
            let p = lam[(i + 1) % 4].mul(&lam[(i + 2) % 4]).mul(&lam[(i + 3) % 4]);
            let g = geom.grad_lambda[i];
            for a in 0..3 {
                for b in 0..3 {
                    entries[a * 3 + b] = entries[a * 3 + b].axpy(g[a] * g[b], &p);
                }
            }
        }
        PolyField::matrix(3, entries)
    }
}

/// Basis of the skew-symmetric matrices, `K_j = kappa(2 e_j)`.
pub fn skew_basis(dim: usize) -> Vec<Vec<f64>> {
    if dim == 2 {
        vec![vec![0.0, -1.0, 1.0, 0.0]]
    } else {
        vec![
            vec![0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ]
    }
}

/// L2(T)-orthonormal basis of the complement of `P^{k-1}` in `P^k`, by Gram-Schmidt on monomials.
pub fn orthogonal_complement(geom: &ElementGeometry, k: usize) -> Result<Vec<Polynomial>> {
    let dim = geom.dim;
    let n = table(dim).count(k);
    let qp = geom.volume_points(2 * k)?;
    let mons: Vec<PolyField> = (0..n).map(|i| PolyField::scalar(scalar_monomial(dim, i))).collect();
    let tab = Tabulation::new(&mons, &qp.xi);
    let gram = DMatrix::from_fn(n, n, |i, j| {
        (0..qp.len()).map(|q| qp.w[q] * tab.at(q, i)[0] * tab.at(q, j)[0]).sum::<f64>() / geom.volume
    });
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * gram[(i, j)] * b[j];
            }
        }
        s
    };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let d = ip(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nv = ip(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    let first = table(dim).count(k - 1);
    Ok(basis[first..].iter().map(|c| Polynomial::from_coeffs(dim, c.clone())).collect())
}

fn vec_mat(v: &PolyField, m: &PolyField) -> PolyField {
    let n = v.ncomp();
    let dim = v.dim();
    PolyField::vector(
        (0..n)
            .map(|j| (0..n).fold(Polynomial::zero(dim), |acc, i| acc.axpy(1.0, &v.entries[i].mul(m.entry(i, j)))))
            .collect(),
    )
}

/// Root-mean-square value over the element.
fn rms(geom: &ElementGeometry, f: &PolyField) -> Result<f64> {
    let qp = geom.volume_points(2 * f.degree())?;
    let tab = Tabulation::new(std::slice::from_ref(f), &qp.xi);
    let s: f64 = (0..qp.len()).map(|q| qp.w[q] * tab.at(q, 0).iter().map(|a| a * a).sum::<f64>()).sum();
    Ok((s / geom.volume).sqrt())
}

/// Enrichment shapes `dev(curl(curl(r) B))`, `r` over a basis of the orthogonal complement
/// of `P^{k-1}(T, K)` in `P^k(T, K)`, each normalized to unit RMS.
pub fn enrichment_basis(geom: &ElementGeometry, k: usize) -> Result<Vec<PolyField>> {
    let d = geom.dim;
    let bubble = matrix_bubble(geom);
    let mut out = Vec::new();
    for rho in orthogonal_complement(geom, k)? {
        for kmat in skew_basis(d) {
            let r = PolyField::matrix(d, kmat.iter().map(|&a| rho.scale(a)).collect());
            let inner = curl(&r, CurlKind::RowWise)?;
            let shape = if d == 2 {
                dev(&curl(&vec_mat(&inner, &bubble), CurlKind::VectorToMatrix2d)?)?
            } else {
                dev(&curl(&inner.matmul(&bubble)?, CurlKind::RowWise)?)?
            };
            let s = rms(geom, &shape)?;
            out.push(shape.scale(1.0 / s));
        }
    }
    let gram = l2_gram(geom, &out)?;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let max = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-10 * max) {
        return Err(McsError::EnrichmentRank { element: geom.index });
    }
    Ok(out)
}

/// `(1/|T|) (f_i, f_j)_T`.
pub fn l2_gram(geom: &ElementGeometry, fields: &[PolyField]) -> Result<DMatrix<f64>> {
    let deg = fields.iter().map(|f| f.degree()).max().unwrap_or(0);
    let qp = geom.volume_points(2 * deg)?;
    let tab = Tabulation::new(fields, &qp.xi);
    let n = fields.len();
    let mut g = DMatrix::zeros(n, n);
    for q in 0..qp.len() {
        let w = qp.w[q] / geom.volume;
        for i in 0..n {
            let a = tab.at(q, i);
            for j in 0..=i {
                let v: f64 = a.iter().zip(tab.at(q, j)).map(|(x, y)| x * y).sum();
                g[(i, j)] += w * v;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    Ok(g)
}

/// Scalar monomial basis of `P^k` in `xi`.
pub fn scalar_basis(dim: usize, k: usize) -> Vec<PolyField> {
    (0..table(dim).count(k)).map(|i| PolyField::scalar(scalar_monomial(dim, i))).collect()
}

/// Skew matrix fields `xi^alpha K_j`, monomial outermost.
pub fn vorticity_basis(dim: usize, k: usize) -> Vec<PolyField> {
    monomial_times_matrices(dim, k, &skew_basis(dim))
}
