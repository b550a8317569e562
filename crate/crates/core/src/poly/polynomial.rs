use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::monomial::{table, Exponent};

/// Multivariate polynomial with real coefficients over the graded monomial
/// table of its number of variables. Coefficient `i` multiplies monomial
/// `table(dim).exps[i]`; trailing zeros are trimmed.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, coeffs: Vec::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_coeffs(dim, vec![c])
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        let mut e = [0u8; 3];
        e[axis] = 1;
        Self::monomial(dim, e, 1.0)
    }

    pub fn monomial(dim: usize, e: Exponent, c: f64) -> Self {
        let i = table(dim).index_of(&e);
        let mut coeffs = vec![0.0; i + 1];
        coeffs[i] = c;
        Self::from_coeffs(dim, coeffs)
    }

    /// Affine function `c + g . x`.
    pub fn affine(dim: usize, c: f64, g: &[f64]) -> Self {
        let mut coeffs = vec![c];
        coeffs.extend_from_slice(&g[..dim]);
        Self::from_coeffs(dim, coeffs)
    }

    pub fn from_coeffs(dim: usize, mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { dim, coeffs }
    }

    /// Builds from `(exponent, coefficient)` pairs; repeated exponents add.
    pub fn from_terms(dim: usize, terms: &[(Exponent, f64)]) -> Self {
        let t = table(dim);
        let mut coeffs = Vec::new();
        for (e, c) in terms {
            let i = t.index_of(e);
            if coeffs.len() <= i {
                coeffs.resize(i + 1, 0.0);
            }
            coeffs[i] += c;
        }
        Self::from_coeffs(dim, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Number of leading table entries spanned by the coefficient vector.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total degree; the zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        let t = table(self.dim);
        self.coeffs.iter().enumerate().rev().find(|(_, &c)| c != 0.0).map(|(i, _)| t.degree_of(i)).unwrap_or(0)
    }

    pub fn coeff(&self, e: &Exponent) -> f64 {
        let i = table(self.dim).index_of(e);
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Nonzero `(exponent, coefficient)` pairs in table order.
    pub fn terms(&self) -> impl Iterator<Item = (Exponent, f64)> + '_ {
        let t = table(self.dim);
        self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0.0).map(move |(i, &c)| (t.exps[i], c))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = Vec::new();
        table(self.dim).values(x, self.coeffs.len(), &mut v);
        self.eval_with(&v)
    }

    /// Evaluates against precomputed monomial values (at least `self.len()` of them).
    #[inline]
    pub fn eval_with(&self, monomials: &[f64]) -> f64 {
        self.coeffs.iter().zip(monomials).map(|(c, m)| c * m).sum()
    }

    pub fn scale(&self, a: f64) -> Self {
        if a == 0.0 {
            return Self::zero(self.dim);
        }
        Self::from_coeffs(self.dim, self.coeffs.iter().map(|c| a * c).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += a * c;
        }
        Self::from_coeffs(self.dim, coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        let t = table(self.dim);
        let mut coeffs: Vec<f64> = Vec::new();
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ea = t.exps[i];
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let eb = t.exps[j];
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                let k = t.index_of(&e);
                if coeffs.len() <= k {
                    coeffs.resize(k + 1, 0.0);
                }
                coeffs[k] += a * b;
            }
        }
        Self::from_coeffs(self.dim, coeffs)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to variable `axis`.
    pub fn diff(&self, axis: usize) -> Self {
        assert!(axis < self.dim, "axis {axis} out of range for {} variables", self.dim);
        let t = table(self.dim);
        let mut coeffs: Vec<f64> = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            let e = t.exps[i];
            if c == 0.0 || e[axis] == 0 {
                continue;
            }
            let mut d = e;
            d[axis] -= 1;
            let k = t.index_of(&d);
            if coeffs.len() <= k {
                coeffs.resize(k + 1, 0.0);
            }
            coeffs[k] += c * e[axis] as f64;
        }
        Self::from_coeffs(self.dim, coeffs)
    }

    /// Substitutes `x = A y + b`, where `A` has `self.dim` rows and `new_dim` columns.
    pub fn compose_affine(&self, a: &[[f64; 3]; 3], b: &[f64; 3], new_dim: usize) -> Self {
        let subs: Vec<Polynomial> = (0..self.dim)
            .map(|i| {
                let mut g = [0.0; 3];
                g[..new_dim].copy_from_slice(&a[i][..new_dim]);
                Polynomial::affine(new_dim, b[i], &g)
            })
            .collect();
        self.compose(&subs)
    }

    /// Substitutes polynomial `subs[i]` for variable `i`.
    pub fn compose(&self, subs: &[Polynomial]) -> Self {
        assert_eq!(subs.len(), self.dim);
        let new_dim = subs[0].dim;
        let t = table(self.dim);
        let max_deg = self.degree();
        // powers[i][p] = subs[i]^p
        let powers: Vec<Vec<Polynomial>> = subs
            .iter()
            .map(|s| {
                let mut v = vec![Polynomial::constant(new_dim, 1.0)];
                for p in 1..=max_deg {
                    let next = v[p - 1].mul(s);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(new_dim);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let e = t.exps[i];
            let mut term = Polynomial::constant(new_dim, c);
            for (v, p) in powers.iter().enumerate() {
                if e[v] > 0 {
                    term = term.mul(&p[e[v] as usize]);
                }
            }
            out = out.axpy(1.0, &term);
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names = ["x", "y", "z"];
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (a, &p) in e.iter().enumerate().take(self.dim) {
                match p {
                    0 => {}
                    1 => write!(f, "*{}", names[a])?,
                    _ => write!(f, "*{}^{}", names[a], p)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.axpy(-1.0, rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}
