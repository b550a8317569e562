//! Structured simplicial meshes of the unit square and cube with facet topology.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{McsError, Result};

pub type Point = [f64; 3];

/// Affine reference-to-physical map `x = F xhat + b`.
#[derive(Clone, Debug, Serialize)]
pub struct AffineMap {
    pub dim: usize,
    pub f: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub det: f64,
    pub finv: [[f64; 3]; 3],
}

impl AffineMap {
    pub fn apply(&self, xhat: &[f64]) -> Point {
        let mut x = self.b;
        for i in 0..self.dim {
            for j in 0..self.dim {
                x[i] += self.f[i][j] * xhat[j];
            }
        }
        x
    }

    pub fn inverse_apply(&self, x: &[f64]) -> Point {
        let mut r = [0.0; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                r[i] += self.finv[i][j] * (x[j] - self.b[j]);
            }
        }
        r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Facet {
    /// Global vertex indices in increasing order.
    pub vertices: Vec<usize>,
    /// Adjacent elements in increasing order (one on the boundary).
    pub elements: Vec<usize>,
    /// Local facet number inside each adjacent element.
    pub local_index: Vec<usize>,
    /// Unit normal, outward from `elements[0]`.
    pub normal: Point,
    /// Orthonormal tangents (one in 2D, two in 3D).
    pub tangents: Vec<Point>,
    pub boundary: bool,
    pub area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub elements: Vec<Vec<usize>>,
    pub facets: Vec<Facet>,
    /// `element_facets[e][i]` is the facet opposite local vertex `i`.
    pub element_facets: Vec<Vec<usize>>,
    pub h: f64,
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

fn normalized(a: Point) -> Point {
    let n = norm(&a);
    [a[0] / n, a[1] / n, a[2] / n]
}

fn det3(m: &[[f64; 3]; 3], dim: usize) -> f64 {
    match dim {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

fn inverse(m: &[[f64; 3]; 3], dim: usize) -> [[f64; 3]; 3] {
    let d = det3(m, dim);
    let mut r = [[0.0; 3]; 3];
    if dim == 2 {
        r[0][0] = m[1][1] / d;
        r[0][1] = -m[0][1] / d;
        r[1][0] = -m[1][0] / d;
        r[1][1] = m[0][0] / d;
    } else {
        for i in 0..3 {
            for j in 0..3 {
                let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
                let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
                r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / d;
            }
        }
    }
    r
}

/// Map taking the reference simplex onto the simplex with the given vertices,
/// reference vertex 0 onto `verts[0]`.
pub fn affine_map_from_vertices(dim: usize, verts: &[Point]) -> AffineMap {
    let mut f = [[0.0; 3]; 3];
    for j in 0..dim {
        let col = sub(&verts[j + 1], &verts[0]);
        for i in 0..dim {
            f[i][j] = col[i];
        }
    }
    let det = det3(&f, dim);
    let finv = if det != 0.0 { inverse(&f, dim) } else { [[f64::NAN; 3]; 3] };
    AffineMap { dim, f, b: verts[0], det, finv }
}

impl Mesh {
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, e: usize) -> Vec<Point> {
        self.elements[e].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn affine_map(&self, e: usize) -> Result<AffineMap> {
        if e >= self.elements.len() {
            return Err(McsError::InvalidMesh(format!("element index {e} out of range")));
        }
        let map = affine_map_from_vertices(self.dim, &self.element_vertices(e));
        if map.det <= 0.0 {
            return Err(McsError::DegenerateElement { element: e, det: map.det });
        }
        Ok(map)
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        let map = affine_map_from_vertices(self.dim, &self.element_vertices(e));
        map.det / if self.dim == 2 { 2.0 } else { 6.0 }
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        let vs = self.element_vertices(e);
        let mut h: f64 = 0.0;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                h = h.max(norm(&sub(&vs[i], &vs[j])));
            }
        }
        h
    }

    /// Outward unit normal of local facet `i` (opposite vertex `i`) of element `e`.
    pub fn outward_normal(&self, e: usize, i: usize) -> Point {
        let vs = self.element_vertices(e);
        let fv: Vec<Point> = (0..=self.dim).filter(|&j| j != i).map(|j| vs[j]).collect();
        let n = if self.dim == 2 {
            let t = sub(&fv[1], &fv[0]);
            normalized([t[1], -t[0], 0.0])
        } else {
            normalized(cross(&sub(&fv[1], &fv[0]), &sub(&fv[2], &fv[0])))
        };
        // orient away from the opposite vertex
        if dot(&n, &sub(&vs[i], &fv[0])) > 0.0 {
            [-n[0], -n[1], -n[2]]
        } else {
            n
        }
    }

    /// `+1` if the global facet normal is outward for element `e`, else `-1`.
    pub fn facet_orientation(&self, e: usize, local: usize) -> f64 {
        let f = &self.facets[self.element_facets[e][local]];
        if f.elements[0] == e {
            1.0
        } else {
            -1.0
        }
    }

    pub fn num_boundary_facets(&self) -> usize {
        self.facets.iter().filter(|f| f.boundary).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds facet topology for the given simplices (vertex 0 first, positive orientation).
    pub fn from_elements(dim: usize, vertices: Vec<Point>, elements: Vec<Vec<usize>>) -> Result<Self> {
        let mut facet_ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut element_facets = Vec::with_capacity(elements.len());
        let mut mesh = Mesh { dim, vertices, elements, facets: Vec::new(), element_facets: Vec::new(), h: 0.0 };
        for e in 0..mesh.elements.len() {
            mesh.affine_map(e)?;
            let mut local = Vec::with_capacity(dim + 1);
            for i in 0..=dim {
                let mut key: Vec<usize> =
                    mesh.elements[e].iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                key.sort_unstable();
                let id = match facet_ids.get(&key) {
                    Some(&id) => {
                        facets[id].elements.push(e);
                        facets[id].local_index.push(i);
                        facets[id].boundary = false;
                        id
                    }
                    None => {
                        let id = facets.len();
                        let pts: Vec<Point> = key.iter().map(|&v| mesh.vertices[v]).collect();
                        let n = mesh.outward_normal(e, i);
                        let (tangents, area) = if dim == 2 {
                            let t = sub(&pts[1], &pts[0]);
                            (vec![normalized(t)], norm(&t))
                        } else {
                            let t1 = normalized(sub(&pts[1], &pts[0]));
                            let t2 = cross(&n, &t1);
                            let area = 0.5 * norm(&cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0])));
                            (vec![t1, t2], area)
                        };
                        facets.push(Facet {
                            vertices: key.clone(),
                            elements: vec![e],
                            local_index: vec![i],
                            normal: n,
                            tangents,
                            boundary: true,
                            area,
                        });
                        facet_ids.insert(key, id);
                        id
                    }
                };
                local.push(id);
            }
            element_facets.push(local);
        }
        for f in &facets {
            if f.elements.len() > 2 {
                return Err(McsError::InvalidMesh("facet shared by more than two elements".into()));
            }
        }
        mesh.facets = facets;
        mesh.element_facets = element_facets;
        mesh.h = mesh_size(&mesh);
        Ok(mesh)
    }
}

/// Structured mesh of `[0,1]^dim` with `n` subdivisions per axis.
///
/// 2D squares are split along the diagonal from `(i, j)` to `(i+1, j+1)`;
/// 3D cubes use the Kuhn triangulation into six tetrahedra.
pub fn build_structured_mesh(dim: usize, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(McsError::InvalidMesh("number of subdivisions must be at least 1".into()));
    }
    let hn = 1.0 / n as f64;
    match dim {
        2 => {
            let id = |i: usize, j: usize| j * (n + 1) + i;
            let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push([i as f64 * hn, j as f64 * hn, 0.0]);
                }
            }
            let mut elements = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for i in 0..n {
                    let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                    elements.push(vec![v00, v10, v11]);
                    elements.push(vec![v00, v11, v01]);
                }
            }
            Mesh::from_elements(2, vertices, elements)
        }
        3 => {
            let m = n + 1;
            let id = |i: usize, j: usize, k: usize| i + m * (j + m * k);
            let mut vertices = Vec::with_capacity(m * m * m);
            for k in 0..=n {
                for j in 0..=n {
                    for i in 0..=n {
                        vertices.push([i as f64 * hn, j as f64 * hn, k as f64 * hn]);
                    }
                }
            }
            const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let mut elements = Vec::with_capacity(6 * n * n * n);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for p in PERMS {
                            let mut c = [i, j, k];
                            let mut tet = vec![id(c[0], c[1], c[2])];
                            for axis in p {
                                c[axis] += 1;
                                tet.push(id(c[0], c[1], c[2]));
                            }
                            let verts: Vec<Point> = tet.iter().map(|&v| vertices[v]).collect();
                            if affine_map_from_vertices(3, &verts).det < 0.0 {
                                tet.swap(2, 3);
                            }
                            elements.push(tet);
                        }
                    }
                }
            }
            Mesh::from_elements(3, vertices, elements)
        }
        _ => Err(McsError::InvalidMesh(format!("dimension must be 2 or 3, got {dim}"))),
    }
}

/// Maximum element diameter.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    (0..mesh.num_elements()).map(|e| mesh.element_diameter(e)).fold(0.0, f64::max)
}
