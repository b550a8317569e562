//! Per-element geometry: barycentric coordinates, facet frames and quadrature points.
//!
//! Shape functions live in the scaled local coordinates `xi = (x - center) / scale`
//! with `scale` the element diameter, so `|xi| <= 1` on every element.

use crate::error::Result;
use crate::mesh::{AffineMap, Mesh, Point};
use crate::poly::quadrature::reference_measure;
use crate::poly::{cached_rule, Polynomial};

/// Quadrature points with physical weights.
#[derive(Clone, Debug, Default)]
pub struct QuadPoints {
    pub x: Vec<Point>,
    pub xi: Vec<Point>,
    pub w: Vec<f64>,
    /// Facet barycentric coordinates w.r.t. the sorted facet vertices, skipping the first.
    pub mu: Vec<Point>,
}

impl QuadPoints {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct LocalFacet {
    pub global: usize,
    pub boundary: bool,
    /// Unit normal pointing out of this element.
    pub outward: Point,
    /// `outward . normal`, i.e. `+1` or `-1`.
    pub orientation: f64,
    /// Global facet normal and tangent frame.
    pub normal: Point,
    pub tangents: Vec<Point>,
    pub area: f64,
    /// Facet vertex positions in increasing global index order.
    pub sorted_vertices: Vec<Point>,
}

#[derive(Clone, Debug)]
pub struct ElementGeometry {
    pub index: usize,
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub map: AffineMap,
    pub center: Point,
    pub scale: f64,
    pub volume: f64,
    /// Physical gradients of the barycentric coordinates.
    pub grad_lambda: Vec<Point>,
    /// `facets[i]` is opposite local vertex `i`.
    pub facets: Vec<LocalFacet>,
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, e: usize) -> Result<Self> {
        let dim = mesh.dim;
        let map = mesh.affine_map(e)?;
        let vertices = mesh.element_vertices(e);
        let mut center = [0.0; 3];
        for v in &vertices {
            for a in 0..dim {
                center[a] += v[a] / (dim + 1) as f64;
            }
        }
        let mut grad_lambda = vec![[0.0; 3]; dim + 1];
        for j in 0..dim {
            for m in 0..dim {
                grad_lambda[j + 1][m] = map.finv[j][m];
                grad_lambda[0][m] -= map.finv[j][m];
            }
        }
        let facets = (0..=dim)
            .map(|i| {
                let global = mesh.element_facets[e][i];
                let f = &mesh.facets[global];
                LocalFacet {
                    global,
                    boundary: f.boundary,
                    outward: mesh.outward_normal(e, i),
                    orientation: mesh.facet_orientation(e, i),
                    normal: f.normal,
                    tangents: f.tangents.clone(),
                    area: f.area,
                    sorted_vertices: f.vertices.iter().map(|&v| mesh.vertices[v]).collect(),
                }
            })
            .collect();
        Ok(Self {
            index: e,
            dim,
            vertices,
            volume: mesh.element_volume(e),
            scale: mesh.element_diameter(e),
            map,
            center,
            grad_lambda,
            facets,
        })
    }

    pub fn to_local(&self, x: &[f64]) -> Point {
        let mut xi = [0.0; 3];
        for a in 0..self.dim {
            xi[a] = (x[a] - self.center[a]) / self.scale;
        }
        xi
    }

    pub fn to_physical(&self, xi: &[f64]) -> Point {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.center[a] + self.scale * xi[a];
        }
        x
    }

    /// Barycentric coordinate `lambda_i` as a polynomial in `xi`.
    pub fn lambda(&self, i: usize) -> Polynomial {
        let g = &self.grad_lambda[i];
        // lambda_i(x) = lambda_i(v_0) + g . (x - v_0)
        let v0 = &self.vertices[0];
        let mut c = if i == 0 { 1.0 } else { 0.0 };
        let mut lin = [0.0; 3];
        for a in 0..self.dim {
            c += g[a] * (self.center[a] - v0[a]);
            lin[a] = g[a] * self.scale;
        }
        Polynomial::affine(self.dim, c, &lin)
    }

    /// Volume quadrature points for a rule exact to `degree`.
    pub fn volume_points(&self, degree: usize) -> Result<QuadPoints> {
        let rule = cached_rule(self.dim, degree)?;
        let mut qp = QuadPoints::default();
        for q in 0..rule.len() {
            let x = self.map.apply(rule.reference_point(q));
            qp.xi.push(self.to_local(&x));
            qp.x.push(x);
            qp.w.push(rule.weights[q] * self.map.det);
        }
        Ok(qp)
    }

    /// Quadrature points on local facet `i` for a rule exact to `degree`.
    pub fn facet_points(&self, i: usize, degree: usize) -> Result<QuadPoints> {
        let fd = self.dim - 1;
        let rule = cached_rule(fd, degree)?;
        let f = &self.facets[i];
        let wscale = f.area / reference_measure(fd);
        let mut qp = QuadPoints::default();
        for q in 0..rule.len() {
            let bary = &rule.points[q];
            let mut x = [0.0; 3];
            for (b, v) in bary.iter().zip(&f.sorted_vertices) {
                for a in 0..self.dim {
                    x[a] += b * v[a];
                }
            }
            let mut mu = [0.0; 3];
            mu[..fd].copy_from_slice(&bary[1..]);
            qp.xi.push(self.to_local(&x));
            qp.x.push(x);
            qp.w.push(rule.weights[q] * wscale);
            qp.mu.push(mu);
        }
        Ok(qp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn barycentrics_are_a_partition_of_unity_and_nodal() {
        let mesh = build_structured_mesh(3, 2).unwrap();
        let g = ElementGeometry::new(&mesh, 5).unwrap();
        let sum = (0..4).fold(Polynomial::zero(3), |acc, i| acc.axpy(1.0, &g.lambda(i)));
        assert!((sum.eval(&[0.3, -0.2, 0.1]) - 1.0).abs() < 1e-14);
        for (i, v) in g.vertices.iter().enumerate() {
            let xi = g.to_local(v);
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g.lambda(j).eval(&xi) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn facet_weights_sum_to_area() {
        let mesh = build_structured_mesh(2, 3).unwrap();
        let g = ElementGeometry::new(&mesh, 4).unwrap();
        for i in 0..3 {
            let qp = g.facet_points(i, 5).unwrap();
            let s: f64 = qp.w.iter().sum();
            assert!((s - g.facets[i].area).abs() < 1e-15);
            // facet points lie on the facet: lambda_i vanishes
            for xi in &qp.xi {
                assert!(g.lambda(i).eval(xi).abs() < 1e-14);
            }
        }
        let vol: f64 = g.volume_points(2).unwrap().w.iter().sum();
        assert!((vol - g.volume).abs() < 1e-16);
    }
}
