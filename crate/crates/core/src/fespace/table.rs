//! Shape values, derivatives and facet traces at quadrature points.

use super::dofs::Tabulation;
use super::element::{ElementGeometry, QuadPoints};
use crate::error::Result;
use crate::poly::{div, grad, FieldShape, PolyField};

#[derive(Clone, Debug)]
pub struct FacetTable {
    pub points: QuadPoints,
    /// Full shape values at the facet points.
    pub values: Tabulation,
}

/// Tabulated local basis of one element.
///
/// `deriv` holds the gradient of vector shapes (row-major `d x d`) or the
/// row-wise divergence of matrix shapes; it is empty for scalar shapes.
#[derive(Clone, Debug)]
pub struct ShapeTable {
    pub dim: usize,
    pub nshape: usize,
    pub volume: QuadPoints,
    pub values: Tabulation,
    pub deriv: Tabulation,
    pub facets: Vec<FacetTable>,
}

impl ShapeTable {
    /// Tabulates `shapes` (in `xi`) with volume rule exact to `vol_degree` and
    /// facet rules exact to `facet_degree` (`None` skips the facets).
    pub fn new(
        geom: &ElementGeometry,
        shapes: &[PolyField],
        vol_degree: usize,
        facet_degree: Option<usize>,
    ) -> Result<Self> {
        let volume = geom.volume_points(vol_degree)?;
        let values = Tabulation::new(shapes, &volume.xi);
        let inv = 1.0 / geom.scale;
        let derived: Vec<PolyField> = match shapes.first().map(|s| s.shape) {
            Some(FieldShape::Vector(_)) => {
                shapes.iter().map(|s| grad(s).map(|g| g.scale(inv))).collect::<Result<_>>()?
            }
            Some(FieldShape::Matrix(_)) => {
                shapes.iter().map(|s| div(s).map(|g| g.scale(inv))).collect::<Result<_>>()?
            }
            _ => Vec::new(),
        };
        let deriv = Tabulation::new(&derived, &volume.xi);
        let mut facets = Vec::new();
        if let Some(fd) = facet_degree {
            for i in 0..=geom.dim {
                let points = geom.facet_points(i, fd)?;
                let values = Tabulation::new(shapes, &points.xi);
                facets.push(FacetTable { points, values });
            }
        }
        Ok(Self { dim: geom.dim, nshape: shapes.len(), volume, values, deriv, facets })
    }

    /// Divergence of vector shape `i` at volume point `q`.
    pub fn divergence(&self, q: usize, i: usize) -> f64 {
        let g = self.deriv.at(q, i);
        (0..self.dim).map(|a| g[a * self.dim + a]).sum()
    }
}

/// `v . n` for a vector value.
pub fn normal_component(v: &[f64], n: &[f64]) -> f64 {
    v.iter().zip(n).map(|(a, b)| a * b).sum()
}

/// `tau n` for a row-major `d x d` matrix value.
pub fn matrix_times(tau: &[f64], n: &[f64], d: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..d {
        out[i] = (0..d).map(|j| tau[i * d + j] * n[j]).sum();
    }
    out
}

/// Normal-normal component `n^T tau n`.
pub fn nn_component(tau: &[f64], n: &[f64], d: usize) -> f64 {
    normal_component(&matrix_times(tau, n, d)[..d], &n[..d])
}

/// Normal-tangential component `tau n - (n^T tau n) n`.
pub fn nt_component(tau: &[f64], n: &[f64], d: usize) -> [f64; 3] {
    let tn = matrix_times(tau, n, d);
    let nn = normal_component(&tn[..d], &n[..d]);
    let mut out = [0.0; 3];
    for i in 0..d {
        out[i] = tn[i] - nn * n[i];
    }
    out
}

/// Tangential part `v - (v . n) n` of a vector.
pub fn tangential_component(v: &[f64], n: &[f64], d: usize) -> [f64; 3] {
    let vn = normal_component(&v[..d], &n[..d]);
    let mut out = [0.0; 3];
    for i in 0..d {
        out[i] = v[i] - vn * n[i];
    }
    out
}
