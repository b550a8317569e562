//! Bilinear forms, load vector and the global saddle-point system.
//!
//! Unknowns are ordered `(sigma; u, omega; p; mu)`, with `mu` the multiplier of
//! the pressure mean constraint and boundary velocity degrees of freedom removed.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{McsError, Result};
use crate::fespace::table::{nn_component, normal_component, nt_component, tangential_component};
use crate::fespace::{
    build_pressure_space, build_stress_space, build_velocity_space, build_vorticity_space, ElementGeometry, FeSpace,
    ShapeTable,
};
use crate::linsolve::SparseMatrix;
use crate::mesh::Mesh;
use crate::poly::PolyField;

/// Supported `(dimension, order)` pairs.
pub fn is_supported(dim: usize, k: usize) -> bool {
    matches!((dim, k), (2, 1..=3) | (3, 1..=2))
}

/// The four discrete spaces of the method on one mesh.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub k: usize,
    pub stress: FeSpace,
    pub velocity: FeSpace,
    pub vorticity: FeSpace,
    pub pressure: FeSpace,
}

impl Spaces {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        Ok(Self {
            k,
            stress: build_stress_space(mesh, k)?,
            velocity: build_velocity_space(mesh, k)?,
            vorticity: build_vorticity_space(mesh, k)?,
            pressure: build_pressure_space(mesh, k)?,
        })
    }
}

/// Quadrature exactness for element and facet integrals.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadDegrees {
    pub volume: usize,
    pub facet: usize,
}

impl QuadDegrees {
    pub fn for_order(k: usize) -> Self {
        Self { volume: 2 * k + 4, facet: 2 * k + 3 }
    }
}

/// Shape tables of all four spaces on one element, sharing quadrature points.
pub struct LocalData {
    pub geom: ElementGeometry,
    pub sigma_shapes: Vec<PolyField>,
    pub u_shapes: Vec<PolyField>,
    pub sigma: ShapeTable,
    pub u: ShapeTable,
    pub omega: ShapeTable,
    pub p: ShapeTable,
}

impl LocalData {
    pub fn new(mesh: &Mesh, spaces: &Spaces, e: usize, quad: QuadDegrees) -> Result<Self> {
        let geom = ElementGeometry::new(mesh, e)?;
        let sigma_shapes = spaces.stress.local_basis(&geom)?;
        let u_shapes = spaces.velocity.local_basis(&geom)?;
        let sigma = ShapeTable::new(&geom, &sigma_shapes, quad.volume, Some(quad.facet))?;
        let u = ShapeTable::new(&geom, &u_shapes, quad.volume, Some(quad.facet))?;
        let omega = ShapeTable::new(&geom, &spaces.vorticity.local_basis(&geom)?, quad.volume, None)?;
        let p = ShapeTable::new(&geom, &spaces.pressure.local_basis(&geom)?, quad.volume, None)?;
        Ok(Self { geom, sigma_shapes, u_shapes, sigma, u, omega, p })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense row-major local matrix.
#[derive(Clone, Debug)]
pub struct LocalMatrix {
    pub rows: usize,
    pub cols: usize,
    pub vals: Vec<f64>,
}

impl LocalMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, vals: vec![0.0; rows * cols] }
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.vals[i * self.cols + j] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.vals[i * self.cols + j]
    }
}

/// `(nu^{-1} sigma_j, sigma_i)_T`.
pub fn local_a(ld: &LocalData, nu: f64) -> LocalMatrix {
    let n = ld.sigma.nshape;
    let mut m = LocalMatrix::zeros(n, n);
    for q in 0..ld.sigma.volume.len() {
        let w = ld.sigma.volume.w[q] / nu;
        for i in 0..n {
            let si = ld.sigma.values.at(q, i);
            for j in 0..=i {
                m.add(i, j, w * dot(si, ld.sigma.values.at(q, j)));
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m.vals[j * n + i] = m.vals[i * n + j];
        }
    }
    m
}

/// `(div u_j, p_i)_T`, rows pressure, columns velocity.
pub fn local_b1(ld: &LocalData) -> LocalMatrix {
    let (np, nu) = (ld.p.nshape, ld.u.nshape);
    let mut m = LocalMatrix::zeros(np, nu);
    for q in 0..ld.u.volume.len() {
        let w = ld.u.volume.w[q];
        for j in 0..nu {
            let d = w * ld.u.divergence(q, j);
            for i in 0..np {
                m.add(i, j, d * ld.p.values.at(q, i)[0]);
            }
        }
    }
    m
}

/// `int_T tau_j : eta_i`, rows vorticity, columns stress.
fn local_tau_eta(ld: &LocalData) -> LocalMatrix {
    let (nw, ns) = (ld.omega.nshape, ld.sigma.nshape);
    let mut m = LocalMatrix::zeros(nw, ns);
    for q in 0..ld.sigma.volume.len() {
        let w = ld.sigma.volume.w[q];
        for i in 0..nw {
            let eta = ld.omega.values.at(q, i);
            for j in 0..ns {
                m.add(i, j, w * dot(eta, ld.sigma.values.at(q, j)));
            }
        }
    }
    m
}

/// Volume representation of `b2` on one element: rows `(u, omega)`, columns stress.
///
/// `int_T div(tau) . v + int_T tau : eta - int_{dT} tau_nn (v . n)` with the outward normal.
pub fn local_b2_volume(ld: &LocalData) -> LocalMatrix {
    let d = ld.geom.dim;
    let (nu, ns) = (ld.u.nshape, ld.sigma.nshape);
    let mut m = LocalMatrix::zeros(nu + ld.omega.nshape, ns);
    for q in 0..ld.u.volume.len() {
        let w = ld.u.volume.w[q];
        for i in 0..nu {
            let v = ld.u.values.at(q, i);
            for j in 0..ns {
                m.add(i, j, w * dot(ld.sigma.deriv.at(q, j), v));
            }
        }
    }
    for f in 0..=d {
        let n = ld.geom.facets[f].outward;
        let (st, ut) = (&ld.sigma.facets[f], &ld.u.facets[f]);
        for q in 0..st.points.len() {
            let w = st.points.w[q];
            let nn: Vec<f64> = (0..ns).map(|j| nn_component(st.values.at(q, j), &n, d)).collect();
            for i in 0..nu {
                let vn = w * normal_component(ut.values.at(q, i), &n[..d]);
                for j in 0..ns {
                    m.add(i, j, -nn[j] * vn);
                }
            }
        }
    }
    let te = local_tau_eta(ld);
    for i in 0..te.rows {
        for j in 0..ns {
            m.add(nu + i, j, te.get(i, j));
        }
    }
    m
}

/// Volume part of the integrated-by-parts representation: `-int_T tau : (grad v - eta)`.
pub fn local_b2_ibp_volume(ld: &LocalData) -> LocalMatrix {
    let (nu, ns) = (ld.u.nshape, ld.sigma.nshape);
    let mut m = LocalMatrix::zeros(nu + ld.omega.nshape, ns);
    for q in 0..ld.u.volume.len() {
        let w = ld.u.volume.w[q];
        for i in 0..nu {
            let g = ld.u.deriv.at(q, i);
            for j in 0..ns {
                m.add(i, j, -w * dot(ld.sigma.values.at(q, j), g));
            }
        }
    }
    let te = local_tau_eta(ld);
    for i in 0..te.rows {
        for j in 0..ns {
            m.add(nu + i, j, te.get(i, j));
        }
    }
    m
}

/// `-(f, v)_T` with quadrature exact to `degree`.
pub fn local_rhs(geom: &ElementGeometry, u_shapes: &[PolyField], f: &PolyField, degree: usize) -> Result<Vec<f64>> {
    let tab = ShapeTable::new(geom, u_shapes, degree, None)?;
    let mut out = vec![0.0; u_shapes.len()];
    for q in 0..tab.volume.len() {
        let fx = f.eval(&tab.volume.x[q][..geom.dim]);
        let w = tab.volume.w[q];
        for (i, o) in out.iter_mut().enumerate() {
            *o -= w * dot(&fx, tab.values.at(q, i));
        }
    }
    Ok(out)
}

fn scatter(local: &LocalMatrix, rows: &[usize], cols: &[usize], out: &mut Vec<(usize, usize, f64)>) {
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let v = local.get(i, j);
            if v != 0.0 {
                out.push((r, c, v));
            }
        }
    }
}

/// Runs `f` on every element in parallel and concatenates the triplets in element order.
fn element_triplets<F>(mesh: &Mesh, spaces: &Spaces, quad: QuadDegrees, f: F) -> Result<Vec<(usize, usize, f64)>>
where
    F: Fn(&LocalData, &mut Vec<(usize, usize, f64)>) + Sync,
{
    let parts: Vec<Vec<(usize, usize, f64)>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let ld = LocalData::new(mesh, spaces, e, quad)?;
            let mut t = Vec::new();
            f(&ld, &mut t);
            Ok(t)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn u_omega_rows(spaces: &Spaces, e: usize) -> Vec<usize> {
    let nu = spaces.velocity.ndof;
    let mut rows = spaces.velocity.element_dofs[e].clone();
    rows.extend(spaces.vorticity.element_dofs[e].iter().map(|&i| nu + i));
    rows
}

fn check_trace_free(mesh: &Mesh, spaces: &Spaces) -> Result<()> {
    let geom = ElementGeometry::new(mesh, 0)?;
    for s in spaces.stress.local_basis(&geom)? {
        if s.trace()?.max_abs_coeff() > 1e-12 * s.max_abs_coeff() {
            return Err(McsError::Shape("stress shape with nonzero trace".into()));
        }
    }
    Ok(())
}

/// Stress mass block `(nu^{-1} sigma, tau)`; equals `(nu^{-1} dev sigma, dev tau)` on trace-free shapes.
pub fn assemble_a(mesh: &Mesh, spaces: &Spaces, nu: f64, quad: QuadDegrees) -> Result<SparseMatrix> {
    check_trace_free(mesh, spaces)?;
    let n = spaces.stress.ndof;
    let t = element_triplets(mesh, spaces, quad, |ld, out| {
        let dofs = &spaces.stress.element_dofs[ld.geom.index];
        scatter(&local_a(ld, nu), dofs, dofs, out);
    })?;
    Ok(SparseMatrix::from_triplets(n, n, t))
}

/// `(div u, p)`: rows pressure, columns full velocity numbering.
pub fn assemble_b1(mesh: &Mesh, spaces: &Spaces, quad: QuadDegrees) -> Result<SparseMatrix> {
    let t = element_triplets(mesh, spaces, quad, |ld, out| {
        let e = ld.geom.index;
        scatter(&local_b1(ld), &spaces.pressure.element_dofs[e], &spaces.velocity.element_dofs[e], out);
    })?;
    Ok(SparseMatrix::from_triplets(spaces.pressure.ndof, spaces.velocity.ndof, t))
}

/// Volume form of `b2`. Rows: full velocity numbering followed by vorticity; columns: stress.
pub fn assemble_b2_volume(mesh: &Mesh, spaces: &Spaces, quad: QuadDegrees) -> Result<SparseMatrix> {
    let t = element_triplets(mesh, spaces, quad, |ld, out| {
        let e = ld.geom.index;
        scatter(&local_b2_volume(ld), &u_omega_rows(spaces, e), &spaces.stress.element_dofs[e], out);
    })?;
    Ok(SparseMatrix::from_triplets(spaces.velocity.ndof + spaces.vorticity.ndof, spaces.stress.ndof, t))
}

/// Integrated-by-parts form of `b2`, built from velocity gradients and tangential
/// jumps `tau_nt . [v_t]` on every facet, the stress trace taken from the first
/// adjacent element. Same layout as [`assemble_b2_volume`].
pub fn assemble_b2_ibp(mesh: &Mesh, spaces: &Spaces, quad: QuadDegrees) -> Result<SparseMatrix> {
    let d = mesh.dim;
    let locals: Vec<LocalData> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| LocalData::new(mesh, spaces, e, quad))
        .collect::<Result<_>>()?;
    let mut t = Vec::new();
    for ld in &locals {
        let e = ld.geom.index;
        scatter(&local_b2_ibp_volume(ld), &u_omega_rows(spaces, e), &spaces.stress.element_dofs[e], &mut t);
    }
    for facet in &mesh.facets {
        let n = facet.normal;
        let owner = &locals[facet.elements[0]];
        let st = &owner.sigma.facets[facet.local_index[0]];
        let sdofs = &spaces.stress.element_dofs[facet.elements[0]];
        for (side, &e) in facet.elements.iter().enumerate() {
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let ut = &locals[e].u.facets[facet.local_index[side]];
            let udofs = &spaces.velocity.element_dofs[e];
            let mut local = LocalMatrix::zeros(udofs.len(), sdofs.len());
            for q in 0..st.points.len() {
                // both sides enumerate the facet points in the same physical order
                let w = st.points.w[q] * sign;
                let nts: Vec<[f64; 3]> = (0..sdofs.len()).map(|j| nt_component(st.values.at(q, j), &n, d)).collect();
                for i in 0..udofs.len() {
                    let vt = tangential_component(ut.values.at(q, i), &n, d);
                    for (j, nt) in nts.iter().enumerate() {
                        local.add(i, j, w * dot(&nt[..d], &vt[..d]));
                    }
                }
            }
            scatter(&local, udofs, sdofs, &mut t);
        }
    }
    Ok(SparseMatrix::from_triplets(spaces.velocity.ndof + spaces.vorticity.ndof, spaces.stress.ndof, t))
}

/// Load vector `-(f, v)` over the full velocity numbering.
pub fn assemble_rhs(mesh: &Mesh, spaces: &Spaces, f: &PolyField) -> Result<Vec<f64>> {
    let degree = f.degree() + spaces.k + 1;
    let parts: Vec<Vec<f64>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geom = ElementGeometry::new(mesh, e)?;
            local_rhs(&geom, &spaces.velocity.local_basis(&geom)?, f, degree)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; spaces.velocity.ndof];
    for (e, part) in parts.iter().enumerate() {
        for (&g, v) in spaces.velocity.element_dofs[e].iter().zip(part) {
            out[g] += v;
        }
    }
    Ok(out)
}

/// Integrals of the pressure basis functions (the mean-constraint row).
pub fn pressure_mean_row(mesh: &Mesh, spaces: &Spaces) -> Result<Vec<f64>> {
    let mut out = vec![0.0; spaces.pressure.ndof];
    for e in 0..mesh.num_elements() {
        let geom = ElementGeometry::new(mesh, e)?;
        let tab = ShapeTable::new(&geom, &spaces.pressure.local_basis(&geom)?, spaces.k, None)?;
        for (i, &g) in spaces.pressure.element_dofs[e].iter().enumerate() {
            out[g] += (0..tab.volume.len()).map(|q| tab.volume.w[q] * tab.values.at(q, i)[0]).sum::<f64>();
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlockOffsets {
    pub sigma: usize,
    pub u: usize,
    pub omega: usize,
    pub p: usize,
    pub mu: usize,
    pub total: usize,
}

/// The assembled symmetric indefinite system.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub dim: usize,
    pub k: usize,
    pub nu: f64,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub offsets: BlockOffsets,
    pub spaces: Spaces,
    /// Full velocity numbering to unconstrained numbering.
    pub velocity_free: Vec<Option<usize>>,
}

/// Coefficient vectors of a solved system, velocity in the full numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSolution {
    pub sigma: Vec<f64>,
    pub u: Vec<f64>,
    pub omega: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: f64,
    pub residual: f64,
}

impl SaddleSystem {
    /// Splits a solution vector of the system into fields.
    pub fn split(&self, x: &[f64], residual: f64) -> DiscreteSolution {
        let o = &self.offsets;
        let u = self.velocity_free.iter().map(|m| m.map_or(0.0, |i| x[o.u + i])).collect();
        DiscreteSolution {
            sigma: x[o.sigma..o.u].to_vec(),
            u,
            omega: x[o.omega..o.p].to_vec(),
            p: x[o.p..o.mu].to_vec(),
            mu: x[o.mu],
            residual,
        }
    }

    /// Writes the matrix as Matrix Market triplets followed by nothing else.
    pub fn write_matrix_market<W: Write>(&self, w: W) -> Result<()> {
        self.matrix.write_matrix_market(w)
    }
}

/// Local blocks of one element for the full system.
struct ElementBlocks {
    a: LocalMatrix,
    b2: LocalMatrix,
    b1: LocalMatrix,
    rhs: Vec<f64>,
    mean: Vec<f64>,
}

/// Assembles the system for body force `f` and viscosity `nu`.
pub fn build_system(mesh: &Mesh, k: usize, nu: f64, f: &PolyField) -> Result<SaddleSystem> {
    build_system_with(mesh, k, nu, f, QuadDegrees::for_order(k))
}

pub fn build_system_with(mesh: &Mesh, k: usize, nu: f64, f: &PolyField, quad: QuadDegrees) -> Result<SaddleSystem> {
    if !is_supported(mesh.dim, k) {
        return Err(McsError::Unsupported(format!("order {k} in dimension {}", mesh.dim)));
    }
    if !(nu > 0.0) {
        return Err(McsError::Unsupported(format!("viscosity must be positive, got {nu}")));
    }
    let spaces = Spaces::new(mesh, k)?;
    check_trace_free(mesh, &spaces)?;
    let rhs_degree = f.degree() + k + 1;
    let blocks: Vec<ElementBlocks> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let ld = LocalData::new(mesh, &spaces, e, quad)?;
            let rhs = local_rhs(&ld.geom, &ld.u_shapes, f, rhs_degree)?;
            let mean = (0..ld.p.nshape)
                .map(|i| (0..ld.p.volume.len()).map(|q| ld.p.volume.w[q] * ld.p.values.at(q, i)[0]).sum())
                .collect();
            Ok(ElementBlocks { a: local_a(&ld, nu), b2: local_b2_volume(&ld), b1: local_b1(&ld), rhs, mean })
        })
        .collect::<Result<_>>()?;

    let (free, nfree) = spaces.velocity.free_numbering();
    let ns = spaces.stress.ndof;
    let nw = spaces.vorticity.ndof;
    let np = spaces.pressure.ndof;
    let offsets = BlockOffsets {
        sigma: 0,
        u: ns,
        omega: ns + nfree,
        p: ns + nfree + nw,
        mu: ns + nfree + nw + np,
        total: ns + nfree + nw + np + 1,
    };
    let mut t = Vec::new();
    let mut rhs = vec![0.0; offsets.total];
    let sym = |r: usize, c: usize, v: f64, t: &mut Vec<(usize, usize, f64)>| {
        t.push((r, c, v));
        t.push((c, r, v));
    };
    for (e, b) in blocks.iter().enumerate() {
        let sd = &spaces.stress.element_dofs[e];
        let ud: Vec<Option<usize>> = spaces.velocity.element_dofs[e].iter().map(|&g| free[g]).collect();
        let wd = &spaces.vorticity.element_dofs[e];
        let pd = &spaces.pressure.element_dofs[e];
        for (i, &r) in sd.iter().enumerate() {
            for (j, &c) in sd.iter().enumerate() {
                let v = b.a.get(i, j);
                if v != 0.0 {
                    t.push((r, c, v));
                }
            }
        }
        let nu_loc = ud.len();
        for (j, &c) in sd.iter().enumerate() {
            for (i, g) in ud.iter().enumerate() {
                let v = b.b2.get(i, j);
                if let (Some(g), true) = (g, v != 0.0) {
                    sym(offsets.u + g, c, v, &mut t);
                }
            }
            for (i, &g) in wd.iter().enumerate() {
                let v = b.b2.get(nu_loc + i, j);
                if v != 0.0 {
                    sym(offsets.omega + g, c, v, &mut t);
                }
            }
        }
        for (i, &g) in pd.iter().enumerate() {
            for (j, uj) in ud.iter().enumerate() {
                let v = b.b1.get(i, j);
                if let (Some(uj), true) = (uj, v != 0.0) {
                    sym(offsets.p + g, offsets.u + uj, v, &mut t);
                }
            }
            sym(offsets.p + g, offsets.mu, b.mean[i], &mut t);
        }
        for (i, g) in ud.iter().enumerate() {
            if let Some(g) = g {
                rhs[offsets.u + g] += b.rhs[i];
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(offsets.total, offsets.total, t);
    log::info!(
        "assembled d={} k={k} elements={} unknowns={} nnz={}",
        mesh.dim,
        mesh.num_elements(),
        offsets.total,
        matrix.nnz()
    );
    Ok(SaddleSystem { dim: mesh.dim, k, nu, matrix, rhs, offsets, spaces, velocity_free: free })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use crate::poly::FieldShape;

    #[test]
    fn unknown_count_on_two_triangles() {
        let mesh = build_structured_mesh(2, 1).unwrap();
        let f = PolyField::zero(FieldShape::Vector(2), 2);
        let s = build_system(&mesh, 1, 1.0, &f).unwrap();
        assert_eq!(s.offsets.total, 39);
        assert!(s.matrix.asymmetry() <= 1e-12 * s.matrix.max_abs());
        assert!(s.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_unsupported_orders() {
        let mesh = build_structured_mesh(3, 1).unwrap();
        let f = PolyField::zero(FieldShape::Vector(3), 3);
        assert!(build_system(&mesh, 3, 1.0, &f).is_err());
        let mesh = build_structured_mesh(2, 1).unwrap();
        let f = PolyField::zero(FieldShape::Vector(2), 2);
        assert!(build_system(&mesh, 4, 1.0, &f).is_err());
        assert!(build_system(&mesh, 1, 0.0, &f).is_err());
    }
}
