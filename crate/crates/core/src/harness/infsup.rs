//! Dense estimate of the discrete inf-sup constant of the combined constraint block.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{McsError, Result};
use crate::fespace::table::tangential_component;
use crate::forms::{local_a, local_b1, local_b2_volume, LocalData, QuadDegrees, Spaces};
use crate::mesh::Mesh;

/// Largest number of unknowns accepted by the dense estimate.
pub const MAX_DENSE_UNKNOWNS: usize = 6000;

#[derive(Clone, Debug, Serialize)]
pub struct InfSup {
    pub value: f64,
    /// Dimension of the velocity-vorticity side.
    pub rows: usize,
    /// Dimension of the stress-pressure side.
    pub cols: usize,
}

fn add_block(m: &mut DMatrix<f64>, rows: &[Option<usize>], cols: &[Option<usize>], f: impl Fn(usize, usize) -> f64) {
    for (i, r) in rows.iter().enumerate() {
        let Some(r) = r else { continue };
        for (j, c) in cols.iter().enumerate() {
            if let Some(c) = c {
                m[(*r, *c)] += f(i, j);
            }
        }
    }
}

fn skew_part(g: &[f64], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            s[i * d + j] = 0.5 * (g[i * d + j] - g[j * d + i]);
        }
    }
    s
}

fn sym_part(g: &[f64], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            s[i * d + j] = 0.5 * (g[i * d + j] + g[j * d + i]);
        }
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest value of `sup (b1(v, q) + b2(tau, (v, gamma))) / (|(tau, q)| |(v, gamma)|_U)`
/// over `(v, gamma)`, by a dense generalized singular value computation.
///
/// With `enriched = false` the stress enrichment is dropped from the supremum.
pub fn estimate_infsup(mesh: &Mesh, k: usize, enriched: bool) -> Result<InfSup> {
    let d = mesh.dim;
    let spaces = Spaces::new(mesh, k)?;
    let quad = QuadDegrees::for_order(k);
    let locals: Vec<LocalData> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| LocalData::new(mesh, &spaces, e, quad))
        .collect::<Result<_>>()?;

    // numbering of the velocity-vorticity side (rows) and the stress-pressure side (columns)
    let (vfree, nv) = spaces.velocity.free_numbering();
    let nw = spaces.vorticity.ndof;
    let ns_all = spaces.stress.ndof;
    let s = &spaces.stress;
    let enrich_start = s.facet_dofs * mesh.facets.len();
    let mut smap = vec![None; ns_all];
    let mut ns = 0;
    for (g, slot) in smap.iter_mut().enumerate() {
        let local = g.checked_sub(enrich_start).map(|i| i % s.interior_dofs);
        let is_enrichment = local.is_some_and(|i| i >= s.interior_dofs - s.enrichment_dofs);
        if enriched || !is_enrichment {
            *slot = Some(ns);
            ns += 1;
        }
    }
    let np = spaces.pressure.ndof;
    let (m, n) = (nv + nw, ns + np);
    if m + n > MAX_DENSE_UNKNOWNS {
        return Err(McsError::Unsupported(format!("{} unknowns exceed the dense inf-sup limit", m + n)));
    }

    let mut b = DMatrix::zeros(m, n);
    let mut mu = DMatrix::zeros(m, m);
    let mut mx = DMatrix::zeros(n, n);
    for ld in &locals {
        let e = ld.geom.index;
        let urows: Vec<Option<usize>> = spaces.velocity.element_dofs[e].iter().map(|&g| vfree[g]).collect();
        let wrows: Vec<Option<usize>> = spaces.vorticity.element_dofs[e].iter().map(|&g| Some(nv + g)).collect();
        let uw: Vec<Option<usize>> = urows.iter().chain(&wrows).copied().collect();
        let scols: Vec<Option<usize>> = spaces.stress.element_dofs[e].iter().map(|&g| smap[g]).collect();
        let pcols: Vec<Option<usize>> = spaces.pressure.element_dofs[e].iter().map(|&g| Some(ns + g)).collect();

        let b2 = local_b2_volume(ld);
        add_block(&mut b, &uw, &scols, |i, j| b2.get(i, j));
        let b1 = local_b1(ld);
        add_block(&mut b, &urows, &pcols, |i, j| b1.get(j, i));
        let a = local_a(ld, 1.0);
        add_block(&mut mx, &scols, &scols, |i, j| a.get(i, j));

        let tab = &ld.u;
        let nq = tab.volume.len();
        let w = &tab.volume.w;
        add_block(&mut mx, &pcols, &pcols, |i, j| {
            (0..nq).map(|q| w[q] * ld.p.values.at(q, i)[0] * ld.p.values.at(q, j)[0]).sum()
        });
        // |eps(v)|^2 + |skew(grad v) - gamma|^2 on the element
        let nu_loc = urows.len();
        let eps_v: Vec<Vec<Vec<f64>>> =
            (0..nq).map(|q| (0..nu_loc).map(|i| sym_part(tab.deriv.at(q, i), d)).collect()).collect();
        let skw_v: Vec<Vec<Vec<f64>>> =
            (0..nq).map(|q| (0..nu_loc).map(|i| skew_part(tab.deriv.at(q, i), d)).collect()).collect();
        let value = |q: usize, i: usize| -> Vec<f64> {
            if i < nu_loc {
                skw_v[q][i].clone()
            } else {
                ld.omega.values.at(q, i - nu_loc).iter().map(|x| -x).collect()
            }
        };
        add_block(&mut mu, &uw, &uw, |i, j| {
            (0..nq)
                .map(|q| {
                    let e = if i < nu_loc && j < nu_loc { dot(&eps_v[q][i], &eps_v[q][j]) } else { 0.0 };
                    w[q] * (e + dot(&value(q, i), &value(q, j)))
                })
                .sum()
        });
    }
    // h^{-1} |[v_t]|^2 on every facet
    for facet in &mesh.facets {
        let ft0 = &locals[facet.elements[0]].u.facets[facet.local_index[0]];
        let hinv = 1.0 / mesh.h;
        let mut rows = Vec::new();
        let mut traces: Vec<Vec<[f64; 3]>> = Vec::new();
        for (side, &e) in facet.elements.iter().enumerate() {
            let ft = &locals[e].u.facets[facet.local_index[side]];
            let sign = if side == 0 { 1.0 } else { -1.0 };
            for (i, &g) in spaces.velocity.element_dofs[e].iter().enumerate() {
                rows.push(vfree[g]);
                traces.push(
                    (0..ft.points.len())
                        .map(|q| tangential_component(ft.values.at(q, i), &facet.normal, d).map(|x| sign * x))
                        .collect(),
                );
            }
        }
        add_block(&mut mu, &rows, &rows, |i, j| {
            (0..ft0.points.len()).map(|q| hinv * ft0.points.w[q] * dot(&traces[i][q][..d], &traces[j][q][..d])).sum()
        });
    }

    let lu =
        mu.cholesky().ok_or_else(|| McsError::Eigen("velocity-vorticity Gram matrix not positive definite".into()))?;
    let lx =
        mx.cholesky().ok_or_else(|| McsError::Eigen("stress-pressure Gram matrix not positive definite".into()))?;
    // C = L_U^{-1} B L_X^{-T}
    let singular = || McsError::Eigen("singular triangular factor".into());
    let left = lu.l().solve_lower_triangular(&b).ok_or_else(singular)?;
    let c = lx.l().solve_lower_triangular(&left.transpose()).ok_or_else(singular)?.transpose();
    let sv = c.singular_values();
    let value = if m > n { 0.0 } else { sv.min() };
    log::info!("inf-sup d={d} k={k} elements={} enriched={enriched}: {value:.6e}", mesh.num_elements());
    Ok(InfSup { value, rows: m, cols: n })
}
