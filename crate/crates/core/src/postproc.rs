//! Element-wise velocity postprocessing into the divergence-free BDM space one order up.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::Result;
use crate::fespace::dofs::{lincomb, vector_monomials, Tabulation};
use crate::fespace::local::{bdm_dofs, rt_dofs};
use crate::fespace::{build_bdm_space, ElementGeometry, FeSpace};
use crate::forms::{DiscreteSolution, Spaces};
use crate::mesh::Mesh;
use crate::poly::{eps, PolyField};

/// Dense Euler-Lagrange system of one element.
///
/// Unknowns are the coefficients of `u*` in the vector monomials of degree `k + 1`
/// (in `xi`), followed by one multiplier per Raviart-Thomas functional.
#[derive(Clone, Debug)]
pub struct LocalKkt {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub nprimal: usize,
}

#[derive(Clone, Debug)]
pub struct LocalMinimum {
    /// Minimizer on the element, in `xi`.
    pub field: PolyField,
    /// Whether the least-squares fallback was used.
    pub fallback: bool,
}

/// `(1/|T|) int_T A : B` for fields tabulated at the same points.
fn strain_inner(tab: &Tabulation, w: &[f64], i: usize, other: &Tabulation, j: usize) -> f64 {
    (0..tab.npts).map(|q| w[q] * tab.at(q, i).iter().zip(other.at(q, j)).map(|(a, b)| a * b).sum::<f64>()).sum()
}

/// Builds the system minimizing `|nu eps(v) - sigma|_T` subject to matching
/// Raviart-Thomas moments with `u`. Both inputs are fields in `xi`.
///
/// The objective is rescaled to `|eps_xi(v) - (scale / nu) sigma|^2 / |T|`, which has the same minimizer.
pub fn local_kkt(geom: &ElementGeometry, sigma: &PolyField, u: &PolyField, nu: f64, k: usize) -> Result<LocalKkt> {
    let basis = vector_monomials(geom.dim, k + 1);
    let strains: Vec<PolyField> = basis.iter().map(eps).collect::<Result<_>>()?;
    let qp = geom.volume_points(2 * k + 2)?;
    let w: Vec<f64> = qp.w.iter().map(|w| w / geom.volume).collect();
    let st = Tabulation::new(&strains, &qp.xi);
    let target = Tabulation::new(&[sigma.scale(geom.scale / nu)], &qp.xi);
    let dofs = rt_dofs(geom, k, 2 * k + 1)?;
    let c = dofs.vandermonde(&basis);
    let cu = dofs.vandermonde(std::slice::from_ref(u));
    let (n, m) = (basis.len(), dofs.len());
    let mut matrix = DMatrix::zeros(n + m, n + m);
    let mut rhs = DVector::zeros(n + m);
    for i in 0..n {
        for j in 0..=i {
            let v = strain_inner(&st, &w, i, &st, j);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
        rhs[i] = strain_inner(&st, &w, i, &target, 0);
    }
    for r in 0..m {
        for j in 0..n {
            matrix[(n + r, j)] = c[(r, j)];
            matrix[(j, n + r)] = c[(r, j)];
        }
        rhs[n + r] = cu[(r, 0)];
    }
    Ok(LocalKkt { matrix, rhs, nprimal: n })
}

/// Solves the local constrained minimization on one element.
pub fn local_minimize(
    geom: &ElementGeometry,
    sigma: &PolyField,
    u: &PolyField,
    nu: f64,
    k: usize,
) -> Result<LocalMinimum> {
    let kkt = local_kkt(geom, sigma, u, nu, k)?;
    let lu = kkt.matrix.clone().full_piv_lu();
    let diag = lu.u().diagonal().map(f64::abs);
    let ratio = if diag.max() > 0.0 { diag.min() / diag.max() } else { 0.0 };
    let (x, fallback) = match (ratio > 1e-12).then(|| lu.solve(&kkt.rhs)).flatten() {
        Some(x) => (x, false),
        None => {
            log::warn!(
                "element {}: local system rank deficient (pivot ratio {ratio:.2e}), using least squares",
                geom.index
            );
            let x = kkt.matrix.svd(true, true).solve(&kkt.rhs, 1e-12 * diag.max()).expect("svd with vectors");
            (x, true)
        }
    };
    let basis = vector_monomials(geom.dim, k + 1);
    Ok(LocalMinimum { field: lincomb(&basis, &x.as_slice()[..kkt.nprimal]), fallback })
}

/// `|nu eps(v) - sigma|^2_T` for fields in `xi`.
pub fn local_objective(geom: &ElementGeometry, v: &PolyField, sigma: &PolyField, nu: f64, k: usize) -> Result<f64> {
    let r = eps(v)?.scale(nu / geom.scale).axpy(-1.0, sigma);
    let qp = geom.volume_points(2 * (k + 1))?;
    let tab = Tabulation::new(&[r], &qp.xi);
    Ok(strain_inner(&tab, &qp.w, 0, &tab, 0))
}

/// Averaged BDM interpolation of element-wise fields (in `xi`, one per element).
///
/// Shared facet moments are the mean of the two one-sided values; boundary facet
/// moments are set to zero.
pub fn reconstruct(mesh: &Mesh, k: usize, local: &[PolyField]) -> Result<(FeSpace, Vec<f64>)> {
    let space = build_bdm_space(mesh, k + 1)?;
    let values: Vec<Vec<f64>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geom = ElementGeometry::new(mesh, e)?;
            let dofs = bdm_dofs(&geom, k + 1, 2 * k + 2)?;
            Ok(dofs.vandermonde(std::slice::from_ref(&local[e])).column(0).iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; space.ndof];
    let facet_block = (mesh.dim + 1) * space.facet_dofs;
    for (e, vals) in values.iter().enumerate() {
        for (i, (&g, v)) in space.element_dofs[e].iter().zip(vals).enumerate() {
            if i >= facet_block {
                out[g] = *v;
            } else if !space.constrained[g] {
                out[g] += 0.5 * v;
            }
        }
    }
    Ok((space, out))
}

#[derive(Clone, Debug)]
pub struct PostProcessed {
    pub space: FeSpace,
    pub coeffs: Vec<f64>,
    /// Element-wise minimizers before reconstruction, in `xi`.
    pub relaxed: Vec<PolyField>,
    pub fallbacks: usize,
}

/// Local minimization on every element followed by the reconstruction.
pub fn postprocess_velocity(mesh: &Mesh, spaces: &Spaces, sol: &DiscreteSolution, nu: f64) -> Result<PostProcessed> {
    let k = spaces.k;
    let mins: Vec<LocalMinimum> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geom = ElementGeometry::new(mesh, e)?;
            let sigma = spaces.stress.local_field(&geom, &sol.sigma)?;
            let u = spaces.velocity.local_field(&geom, &sol.u)?;
            local_minimize(&geom, &sigma, &u, nu, k)
        })
        .collect::<Result<_>>()?;
    let fallbacks = mins.iter().filter(|m| m.fallback).count();
    let relaxed: Vec<PolyField> = mins.into_iter().map(|m| m.field).collect();
    let (space, coeffs) = reconstruct(mesh, k, &relaxed)?;
    Ok(PostProcessed { space, coeffs, relaxed, fallbacks })
}
