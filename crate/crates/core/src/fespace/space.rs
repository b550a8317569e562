//! Global spaces: degree-of-freedom numbering and local bases.

use serde::Serialize;

use super::dofs::lincomb;
use super::element::ElementGeometry;
use super::local::{
    bdm_local_basis, enrichment_basis, nedelec_first_kind, rt_local_basis, scalar_basis, stress_local_basis,
    vorticity_basis,
};
use crate::error::{McsError, Result};
use crate::mesh::Mesh;
use crate::poly::monomial::dim_poly;
use crate::poly::PolyField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    VelocityRt,
    PressureDg,
    VorticitySkew,
    StressMcs,
    VelocityBdm,
}

/// A finite element space on a mesh.
///
/// Facet degrees of freedom come first (`facet * facet_dofs + j`), then the
/// element-interior ones. All facet functionals use the global facet frame, so
/// elements sharing a facet share its degrees of freedom without sign changes.
#[derive(Clone, Debug, Serialize)]
pub struct FeSpace {
    pub kind: SpaceKind,
    pub dim: usize,
    /// Polynomial order (`k`, or `k + 1` for the BDM space).
    pub order: usize,
    pub ndof: usize,
    pub facet_dofs: usize,
    /// Interior degrees of freedom per element, enrichment included.
    pub interior_dofs: usize,
    /// Trailing interior degrees of freedom of each element that belong to the enrichment.
    pub enrichment_dofs: usize,
    pub element_dofs: Vec<Vec<usize>>,
    /// Boundary normal degrees of freedom fixed to zero.
    pub constrained: Vec<bool>,
    /// Whether the zero-mean constraint applies (pressure).
    pub mean_constraint: bool,
}

impl FeSpace {
    fn build(
        kind: SpaceKind,
        mesh: &Mesh,
        order: usize,
        facet_dofs: usize,
        interior_dofs: usize,
        enrichment_dofs: usize,
    ) -> Self {
        let nf = mesh.facets.len();
        let ne = mesh.num_elements();
        let base = nf * facet_dofs;
        let ndof = base + ne * interior_dofs;
        let element_dofs = (0..ne)
            .map(|e| {
                let mut d = Vec::with_capacity((mesh.dim + 1) * facet_dofs + interior_dofs);
                for &f in &mesh.element_facets[e] {
                    d.extend(f * facet_dofs..(f + 1) * facet_dofs);
                }
                d.extend(base + e * interior_dofs..base + (e + 1) * interior_dofs);
                d
            })
            .collect();
        let mut constrained = vec![false; ndof];
        if matches!(kind, SpaceKind::VelocityRt | SpaceKind::VelocityBdm) {
            for (f, facet) in mesh.facets.iter().enumerate() {
                if facet.boundary {
                    constrained[f * facet_dofs..(f + 1) * facet_dofs].iter_mut().for_each(|c| *c = true);
                }
            }
        }
        Self {
            kind,
            dim: mesh.dim,
            order,
            ndof,
            facet_dofs,
            interior_dofs,
            enrichment_dofs,
            element_dofs,
            constrained,
            mean_constraint: kind == SpaceKind::PressureDg,
        }
    }

    pub fn local_dim(&self) -> usize {
        (self.dim + 1) * self.facet_dofs + self.interior_dofs
    }

    pub fn num_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    /// Map from global to unconstrained numbering, and the number of free degrees of freedom.
    pub fn free_numbering(&self) -> (Vec<Option<usize>>, usize) {
        let mut n = 0;
        let map = self
            .constrained
            .iter()
            .map(|&c| {
                if c {
                    None
                } else {
                    n += 1;
                    Some(n - 1)
                }
            })
            .collect();
        (map, n)
    }

    /// Local shape functions in `xi`, ordered like `element_dofs[geom.index]`.
    pub fn local_basis(&self, geom: &ElementGeometry) -> Result<Vec<PolyField>> {
        let k = self.order;
        match self.kind {
            SpaceKind::VelocityRt => rt_local_basis(geom, k),
            SpaceKind::VelocityBdm => bdm_local_basis(geom, k),
            SpaceKind::PressureDg => Ok(scalar_basis(self.dim, k)),
            SpaceKind::VorticitySkew => Ok(vorticity_basis(self.dim, k)),
            SpaceKind::StressMcs => {
                let mut b = stress_local_basis(geom, k)?;
                b.extend(enrichment_basis(geom, k)?);
                Ok(b)
            }
        }
    }

    /// Restriction to one element of the function with global coefficients `global`, in `xi`.
    pub fn local_field(&self, geom: &ElementGeometry, global: &[f64]) -> Result<PolyField> {
        let shapes = self.local_basis(geom)?;
        Ok(lincomb(&shapes, &self.gather(geom.index, global)))
    }

    /// Coefficients of element `e` gathered from a global vector.
    pub fn gather(&self, e: usize, global: &[f64]) -> Vec<f64> {
        self.element_dofs[e].iter().map(|&i| global[i]).collect()
    }
}

fn check_order(k: usize, min: usize) -> Result<()> {
    if k < min {
        return Err(McsError::Unsupported(format!("polynomial order {k} (at least {min} required)")));
    }
    Ok(())
}

fn skew_dim(dim: usize) -> usize {
    dim * (dim - 1) / 2
}

pub fn build_velocity_space(mesh: &Mesh, k: usize) -> Result<FeSpace> {
    check_order(k, 1)?;
    let d = mesh.dim;
    Ok(FeSpace::build(SpaceKind::VelocityRt, mesh, k, dim_poly(d - 1, k), d * dim_poly(d, k - 1), 0))
}

pub fn build_pressure_space(mesh: &Mesh, k: usize) -> Result<FeSpace> {
    check_order(k, 1)?;
    Ok(FeSpace::build(SpaceKind::PressureDg, mesh, k, 0, dim_poly(mesh.dim, k), 0))
}

pub fn build_vorticity_space(mesh: &Mesh, k: usize) -> Result<FeSpace> {
    check_order(k, 1)?;
    let d = mesh.dim;
    Ok(FeSpace::build(SpaceKind::VorticitySkew, mesh, k, 0, skew_dim(d) * dim_poly(d, k), 0))
}

pub fn build_stress_space(mesh: &Mesh, k: usize) -> Result<FeSpace> {
    check_order(k, 1)?;
    let d = mesh.dim;
    let nd = d * d - 1;
    let enrich = skew_dim(d) * (dim_poly(d, k) - dim_poly(d, k - 1));
    Ok(FeSpace::build(
        SpaceKind::StressMcs,
        mesh,
        k,
        (d - 1) * dim_poly(d - 1, k),
        nd * dim_poly(d, k - 1) + enrich,
        enrich,
    ))
}

pub fn build_bdm_space(mesh: &Mesh, order: usize) -> Result<FeSpace> {
    check_order(order, 2)?;
    let d = mesh.dim;
    let interior = nedelec_first_kind(d, order - 1).len();
    Ok(FeSpace::build(SpaceKind::VelocityBdm, mesh, order, dim_poly(d - 1, order), interior, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn dimension_counts_on_two_triangles() {
        let m = build_structured_mesh(2, 1).unwrap();
        let v = build_velocity_space(&m, 1).unwrap();
        assert_eq!(v.local_dim(), 8);
        assert_eq!(v.ndof, 14);
        assert_eq!(v.num_constrained(), 8);
        let p = build_pressure_space(&m, 1).unwrap();
        assert_eq!(p.ndof, 6);
        assert!(p.mean_constraint);
        let s = build_stress_space(&m, 1).unwrap();
        assert_eq!(s.ndof, 20);
        assert_eq!(s.local_dim(), 11);
        let b = build_bdm_space(&m, 2).unwrap();
        assert_eq!(b.local_dim(), 12);
        assert_eq!(b.interior_dofs, 3);
    }

    #[test]
    fn dimension_counts_3d() {
        let m = build_structured_mesh(3, 1).unwrap();
        assert_eq!(build_vorticity_space(&m, 1).unwrap().local_dim(), 12);
        let s = build_stress_space(&m, 1).unwrap();
        assert_eq!(s.local_dim(), 32 + 9);
        assert_eq!(s.enrichment_dofs, 9);
        let v = build_velocity_space(&m, 2).unwrap();
        // (k+1)(k+2)(k+4)/2
        assert_eq!(v.local_dim(), 36);
    }

    #[test]
    fn rejects_order_zero() {
        let m = build_structured_mesh(2, 1).unwrap();
        assert!(build_velocity_space(&m, 0).is_err());
        assert!(build_stress_space(&m, 0).is_err());
        assert!(build_bdm_space(&m, 1).is_err());
    }
}
