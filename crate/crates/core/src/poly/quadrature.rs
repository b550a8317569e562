//! Simplex quadrature by collapsed Gauss–Jacobi product rules.
//!
//! The reference simplex is `conv{0, e_1, ..., e_d}`. Points are stored in
//! barycentric coordinates `(lambda_0, ..., lambda_d)` with
//! `x = sum_{i>=1} lambda_i e_i`; weights sum to the reference measure `1/d!`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use once_cell::sync::Lazy;

use crate::error::{McsError, Result};

/// Highest exactness degree accepted per simplex dimension.
pub const MAX_QUAD_DEGREE: [usize; 4] = [0, 40, 40, 30];

#[derive(Clone, Debug)]
pub struct QuadRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cartesian reference coordinates of point `q`.
    pub fn reference_point(&self, q: usize) -> &[f64] {
        &self.points[q][1..]
    }
}

pub fn reference_measure(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 1.0,
        2 => 0.5,
        3 => 1.0 / 6.0,
        _ => panic!("unsupported simplex dimension {dim}"),
    }
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `(1 - t)^alpha`, exact to degree `2n - 1`.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    // Golub–Welsch on [-1, 1] with weight (1-s)^alpha (1+s)^0.
    let beta = 0.0;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let s = 2.0 * k + alpha + beta;
        let a = if i == 0 {
            (beta - alpha) / (alpha + beta + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
        jac[(i, i)] = a;
        if i + 1 < n {
            let k1 = k + 1.0;
            let s1 = 2.0 * k1 + alpha + beta;
            let num = 4.0 * k1 * (k1 + alpha) * (k1 + beta) * (k1 + alpha + beta);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let b = (num / den).sqrt();
            jac[(i, i + 1)] = b;
            jac[(i + 1, i)] = b;
        }
    }
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let scale = 2f64.powf(alpha + 1.0);
    let nodes = pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect();
    let weights = pairs.iter().map(|p| p.1 / scale).collect();
    (nodes, weights)
}

/// Builds a rule on the reference `dim`-simplex exact for total degree `degree`.
pub fn quad_rule(dim: usize, degree: usize) -> Result<QuadRule> {
    if dim == 0 || dim > 3 {
        return Err(McsError::Unsupported(format!("quadrature on a {dim}-simplex")));
    }
    if degree > MAX_QUAD_DEGREE[dim] {
        return Err(McsError::QuadratureDegree { dim, degree, max: MAX_QUAD_DEGREE[dim] });
    }
    let n = degree / 2 + 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            let (t, w) = gauss_jacobi_unit(n, 0.0);
            for (ti, wi) in t.iter().zip(&w) {
                points.push(vec![1.0 - ti, *ti]);
                weights.push(*wi);
            }
        }
        2 => {
            let (u, wu) = gauss_jacobi_unit(n, 1.0);
            let (v, wv) = gauss_jacobi_unit(n, 0.0);
            for (ui, wui) in u.iter().zip(&wu) {
                for (vj, wvj) in v.iter().zip(&wv) {
                    let x = *ui;
                    let y = vj * (1.0 - ui);
                    points.push(vec![1.0 - x - y, x, y]);
                    weights.push(wui * wvj);
                }
            }
        }
        _ => {
            let (u, wu) = gauss_jacobi_unit(n, 2.0);
            let (v, wv) = gauss_jacobi_unit(n, 1.0);
            let (w, ww) = gauss_jacobi_unit(n, 0.0);
            for (ui, wui) in u.iter().zip(&wu) {
                for (vj, wvj) in v.iter().zip(&wv) {
                    for (wk, wwk) in w.iter().zip(&ww) {
                        let x = *ui;
                        let y = vj * (1.0 - ui);
                        let z = wk * (1.0 - vj) * (1.0 - ui);
                        points.push(vec![1.0 - x - y - z, x, y, z]);
                        weights.push(wui * wvj * wwk);
                    }
                }
            }
        }
    }
    Ok(QuadRule { dim, points, weights, exactness_degree: degree })
}

static CACHE: Lazy<Mutex<HashMap<(usize, usize), Arc<QuadRule>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Memoized [`quad_rule`].
pub fn cached_rule(dim: usize, degree: usize) -> Result<Arc<QuadRule>> {
    if let Some(r) = CACHE.lock().unwrap().get(&(dim, degree)) {
        return Ok(r.clone());
    }
    let r = Arc::new(quad_rule(dim, degree)?);
    CACHE.lock().unwrap().insert((dim, degree), r.clone());
    Ok(r)
}
