//! Graded monomial enumeration shared by every [`Polynomial`](super::Polynomial).
//!
//! Monomials in `dim` variables are numbered degree by degree, so the
//! monomials of total degree `<= n` always occupy a prefix of the table.

use std::collections::HashMap;

use once_cell::sync::Lazy;

/// Exponent multi-index; unused trailing entries are zero.
pub type Exponent = [u8; 3];

/// Largest total degree tabulated per number of variables.
pub const MAX_DEGREE: [usize; 4] = [0, 64, 48, 32];

pub struct MonomialTable {
    pub dim: usize,
    pub exps: Vec<Exponent>,
    /// `(parent, axis)` with `exps[i] = exps[parent] + e_axis`; entry 0 is unused.
    pub parent: Vec<(usize, usize)>,
    /// `degree_start[n]` is the first index of degree `n`; one extra sentinel.
    pub degree_start: Vec<usize>,
    index: HashMap<Exponent, usize>,
}

impl MonomialTable {
    fn build(dim: usize) -> Self {
        let max = MAX_DEGREE[dim];
        let mut exps = Vec::new();
        let mut degree_start = Vec::with_capacity(max + 2);
        for n in 0..=max {
            degree_start.push(exps.len());
            push_degree(dim, n, &mut exps);
        }
        degree_start.push(exps.len());
        let index: HashMap<Exponent, usize> = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let parent = exps
            .iter()
            .map(|e| match (0..dim).find(|&a| e[a] > 0) {
                Some(axis) => {
                    let mut p = *e;
                    p[axis] -= 1;
                    (index[&p], axis)
                }
                None => (0, 0),
            })
            .collect();
        Self { dim, exps, parent, degree_start, index }
    }

    pub fn index_of(&self, e: &Exponent) -> usize {
        match self.index.get(e) {
            Some(&i) => i,
            None => panic!(
                "monomial {:?} exceeds the tabulated degree {} in {} variables",
                e, MAX_DEGREE[self.dim], self.dim
            ),
        }
    }

    /// Number of monomials of total degree `<= degree`.
    pub fn count(&self, degree: usize) -> usize {
        self.degree_start[degree + 1]
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.exps[i].iter().map(|&a| a as usize).sum()
    }

    /// Values of the first `n` monomials at `x`.
    pub fn values(&self, x: &[f64], n: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(n);
        if n == 0 {
            return;
        }
        out.push(1.0);
        for i in 1..n {
            let (p, a) = self.parent[i];
            let v = out[p] * x[a];
            out.push(v);
        }
    }
}

fn push_degree(dim: usize, n: usize, exps: &mut Vec<Exponent>) {
    match dim {
        1 => exps.push([n as u8, 0, 0]),
        2 => {
            for a in (0..=n).rev() {
                exps.push([a as u8, (n - a) as u8, 0]);
            }
        }
        3 => {
            for a in (0..=n).rev() {
                for b in (0..=n - a).rev() {
                    exps.push([a as u8, b as u8, (n - a - b) as u8]);
                }
            }
        }
        _ => unreachable!("monomial tables exist for 1 to 3 variables"),
    }
}

static TABLES: Lazy<[MonomialTable; 3]> =
    Lazy::new(|| [MonomialTable::build(1), MonomialTable::build(2), MonomialTable::build(3)]);

pub fn table(dim: usize) -> &'static MonomialTable {
    assert!((1..=3).contains(&dim), "polynomials are supported in 1 to 3 variables");
    &TABLES[dim - 1]
}

/// Dimension of P^k in `dim` variables.
pub fn dim_poly(dim: usize, degree: usize) -> usize {
    match dim {
        0 => 1,
        1 => degree + 1,
        2 => (degree + 1) * (degree + 2) / 2,
        3 => (degree + 1) * (degree + 2) * (degree + 3) / 6,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Dimension of P^k, with `dim_poly_or_zero(d, -1) == 0`.
pub fn dim_poly_signed(dim: usize, degree: isize) -> usize {
    if degree < 0 {
        0
    } else {
        dim_poly(dim, degree as usize)
    }
}

/// Indices of the homogeneous monomials of total degree `degree`.
pub fn homogeneous(dim: usize, degree: usize) -> std::ops::Range<usize> {
    let t = table(dim);
    t.degree_start[degree]..t.degree_start[degree + 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_counts_match_binomials() {
        for dim in 1..=3 {
            let t = table(dim);
            for k in 0..10 {
                assert_eq!(t.count(k), dim_poly(dim, k));
            }
        }
    }

    #[test]
    fn parent_chain_reproduces_values() {
        let t = table(3);
        let x = [0.3, -1.2, 2.0];
        let mut v = Vec::new();
        t.values(&x, t.count(6), &mut v);
        for (i, e) in t.exps[..t.count(6)].iter().enumerate() {
            let expect = x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32);
            assert!((v[i] - expect).abs() <= 1e-14 * expect.abs().max(1.0));
        }
    }
}
