//! Canonical interpolation and element-wise L2 projection of polynomial fields.

use nalgebra::{DMatrix, DVector};

use super::dofs::Tabulation;
use super::element::ElementGeometry;
use super::local::{bdm_dofs, rt_dofs, stress_dofs};
use super::space::{FeSpace, SpaceKind};
use crate::error::{McsError, Result};
use crate::mesh::Mesh;
use crate::poly::PolyField;

fn expect_kind(space: &FeSpace, kinds: &[SpaceKind]) -> Result<()> {
    if kinds.contains(&space.kind) {
        Ok(())
    } else {
        Err(McsError::Unsupported(format!("operation not defined for a {:?} space", space.kind)))
    }
}

/// Applies the canonical degrees of freedom element by element; shared facet values
/// are taken from the last element visited (they agree up to rounding).
fn canonical(mesh: &Mesh, space: &FeSpace, exact: &PolyField) -> Result<Vec<f64>> {
    let mut out = vec![0.0; space.ndof];
    let deg = exact.degree();
    for e in 0..mesh.num_elements() {
        let geom = ElementGeometry::new(mesh, e)?;
        let k = space.order;
        let dofs = match space.kind {
            SpaceKind::VelocityRt => rt_dofs(&geom, k, deg + k)?,
            SpaceKind::VelocityBdm => bdm_dofs(&geom, k, deg + k)?,
            SpaceKind::StressMcs => stress_dofs(&geom, k, deg + k)?,
            _ => unreachable!(),
        };
        let vals = dofs.apply_physical(exact);
        for (&g, v) in space.element_dofs[e].iter().zip(vals) {
            out[g] = v;
        }
    }
    Ok(out)
}

/// Raviart-Thomas interpolant.
pub fn interpolate_rt(mesh: &Mesh, space: &FeSpace, exact: &PolyField) -> Result<Vec<f64>> {
    expect_kind(space, &[SpaceKind::VelocityRt])?;
    canonical(mesh, space, exact)
}

/// BDM interpolant.
pub fn interpolate_bdm(mesh: &Mesh, space: &FeSpace, exact: &PolyField) -> Result<Vec<f64>> {
    expect_kind(space, &[SpaceKind::VelocityBdm])?;
    canonical(mesh, space, exact)
}

/// Stress interpolant into the unenriched space; enrichment coefficients are zero.
pub fn interpolate_stress(mesh: &Mesh, space: &FeSpace, exact: &PolyField) -> Result<Vec<f64>> {
    expect_kind(space, &[SpaceKind::StressMcs])?;
    canonical(mesh, space, exact)
}

/// Element-wise L2 projection onto a discontinuous space; vorticity targets are skew matrix fields.
pub fn l2_project(mesh: &Mesh, space: &FeSpace, exact: &PolyField) -> Result<Vec<f64>> {
    expect_kind(space, &[SpaceKind::PressureDg, SpaceKind::VorticitySkew])?;
    let mut out = vec![0.0; space.ndof];
    for e in 0..mesh.num_elements() {
        let geom = ElementGeometry::new(mesh, e)?;
        let shapes = space.local_basis(&geom)?;
        let qp = geom.volume_points((exact.degree() + space.order).max(2 * space.order))?;
        let tab = Tabulation::new(&shapes, &qp.xi);
        let n = shapes.len();
        let mut mass = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for q in 0..qp.len() {
            let f = exact.eval(&qp.x[q][..mesh.dim]);
            for i in 0..n {
                let a = tab.at(q, i);
                rhs[i] += qp.w[q] * a.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>();
                for j in 0..n {
                    mass[(i, j)] += qp.w[q] * a.iter().zip(tab.at(q, j)).map(|(x, y)| x * y).sum::<f64>();
                }
            }
        }
        let c =
            mass.cholesky().ok_or_else(|| McsError::Shape(format!("singular mass matrix on element {e}")))?.solve(&rhs);
        for (&g, v) in space.element_dofs[e].iter().zip(c.iter()) {
            out[g] = *v;
        }
    }
    Ok(out)
}
