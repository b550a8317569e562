//! Compressed sparse matrices and the direct saddle-point solve.

use std::io::Write;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::prelude::*;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, CholeskySymbolicParams, SymmetricOrdering};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};

use crate::error::{McsError, Result};
use crate::forms::{DiscreteSolution, SaddleSystem};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last = None;
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows} x {ncols}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx, vals }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `b - K x` with compensated products and sums, accurate to about the
    /// rounding of the result even under heavy cancellation.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let (mut s, mut c) = (b[r], 0.0);
                for (j, v) in self.row(r) {
                    let p = -v * x[j];
                    let pe = (-v).mul_add(x[j], -p);
                    let t = s + p;
                    let z = t - s;
                    c += (s - (t - z)) + (p - z) + pe;
                    s = t;
                }
                s + c
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |K - K^T|` over all entries.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets().into_iter().fold(0.0, |m, (r, c, v)| m.max((v - self.get(c, r)).abs()))
    }

    /// Largest entrywise difference to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let a = self.triplets().into_iter().fold(0.0f64, |m, (r, c, v)| m.max((v - other.get(r, c)).abs()));
        other.triplets().into_iter().fold(a, |m, (r, c, v)| m.max((v - self.get(r, c)).abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Rows and columns renumbered through the maps; entries mapped to `None` are dropped.
    pub fn restrict(&self, rows: &[Option<usize>], nr: usize, cols: &[Option<usize>], nc: usize) -> Self {
        let t = self.triplets().into_iter().filter_map(|(r, c, v)| Some((rows[r]?, cols[c]?, v))).collect();
        Self::from_triplets(nr, nc, t)
    }

    /// Writes the matrix in Matrix Market coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<Triplet<usize, usize, f64>> =
            self.triplets().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| McsError::Solver { reason: format!("sparse structure: {e:?}"), residual: f64::NAN })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Relative residual `|K x - b| / |b|`, or the absolute one when `b = 0`.
pub fn relative_residual(k: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r = k.residual(x, b);
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// Sparse LU solve with up to two steps of iterative refinement.
///
/// Fails when the final residual exceeds `1e-10` relative (`1e-12` absolute for `b = 0`).
pub fn solve_sparse(k: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    if k.nrows != k.ncols || b.len() != k.nrows {
        return Err(McsError::Solver { reason: "dimension mismatch".into(), residual: f64::NAN });
    }
    let n = k.nrows;
    if norm(b) == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let lu = k
        .to_faer()?
        .sp_lu()
        .map_err(|e| McsError::Solver { reason: format!("factorization failed: {e:?}"), residual: f64::NAN })?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&m);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(b);
    let mut res = relative_residual(k, &x, b);
    for _ in 0..2 {
        let dx = solve(&k.residual(&x, b));
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let cres = relative_residual(k, &cand, b);
        if !(cres < res) {
            break;
        }
        x = cand;
        res = cres;
    }
    if !(res <= RESIDUAL_TOL) {
        return Err(McsError::Solver { reason: "residual above tolerance".into(), residual: res });
    }
    log::debug!("sparse solve: n = {n}, nnz = {}, residual = {res:.3e}", k.nnz());
    Ok((x, res))
}

/// Symmetric indefinite solve for matrices whose unknowns split into blocks
/// starting at `blocks[i]` (ending with the dimension); the first block is positive
/// definite and the remaining ones form the constraint part.
///
/// The matrix is equilibrated, shifted by `-shift` on the second block to make
/// it quasi-definite, factored as `L D L^T` in approximate minimum degree order,
/// and the shift is removed again by iterative refinement.
pub fn solve_symmetric_indefinite(
    k: &SparseMatrix,
    b: &[f64],
    blocks: &[usize],
    shift: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = k.nrows;
    if k.ncols != n || b.len() != n || blocks.len() < 2 || blocks[0] != 0 || blocks[blocks.len() - 1] != n {
        return Err(McsError::Solver { reason: "dimension mismatch".into(), residual: f64::NAN });
    }
    if norm(b) == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let fail = |reason: String| McsError::Solver { reason, residual: f64::NAN };
    let scale: Vec<f64> = (0..n)
        .map(|r| {
            let m = k.row(r).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            if m > 0.0 {
                1.0 / m.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut lower: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(k.nnz() / 2 + n);
    for r in 0..n {
        for (c, v) in k.row(r) {
            if c <= r {
                lower.push(Triplet::new(r, c, scale[r] * v * scale[c]));
            }
        }
        if r >= blocks[1] {
            lower.push(Triplet::new(r, r, -shift));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
        .map_err(|e| fail(format!("sparse structure: {e:?}")))?;
    let symbolic = factorize_symbolic_cholesky(
        a.symbolic(),
        Side::Lower,
        SymmetricOrdering::Amd,
        CholeskySymbolicParams::default(),
    )
    .map_err(|e| fail(format!("symbolic factorization: {e:?}")))?;
    let mut values = vec![0.0; symbolic.len_val()];
    let reg = LdltRegularization {
        dynamic_regularization_signs: None,
        dynamic_regularization_delta: shift,
        dynamic_regularization_epsilon: 1e-3 * shift,
    };
    let mut mem = MemBuffer::new(
        symbolic
            .factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default())
            .or(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq)),
    );
    let ldlt = symbolic
        .factorize_numeric_ldlt(
            &mut values,
            a.as_ref(),
            Side::Lower,
            reg,
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .map_err(|e| fail(format!("numeric factorization: {e:?}")))?;
    // solves the scaled, shifted system for an unscaled right-hand side
    let mut solve = |rhs: &[f64]| -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(n, 1, |i, _| scale[i] * rhs[i]);
        ldlt.solve_in_place_with_conj(Conj::No, m.as_mut(), Par::Seq, MemStack::new(&mut mem));
        (0..n).map(|i| scale[i] * m[(i, 0)]).collect()
    };
    // with accurate residuals every block converges to working precision, so the
    // loop stops on the blockwise relative correction rather than on the residual
    let mut x = solve(b);
    let mut steps = 0;
    let mut last = f64::INFINITY;
    while steps < MAX_REFINEMENT {
        let dx = solve(&k.residual(&x, b));
        let change = blocks.windows(2).fold(0.0f64, |m, w| {
            let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let (xb, db) = (inf(&x[w[0]..w[1]]), inf(&dx[w[0]..w[1]]));
            m.max(if db == 0.0 { 0.0 } else { db / xb })
        });
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        steps += 1;
        if change <= 4.0 * f64::EPSILON || change > 0.5 * last {
            break;
        }
        last = change;
    }
    let res = relative_residual(k, &x, b);
    if !(res <= RESIDUAL_TOL) {
        return Err(McsError::Solver {
            reason: format!("residual above tolerance after {steps} refinement steps"),
            residual: res,
        });
    }
    log::debug!(
        "ldlt solve: n = {n}, factor entries = {}, refinement steps = {steps}, residual = {res:.3e}",
        values.len()
    );
    Ok((x, res))
}

/// Largest accepted relative residual.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Refinement steps allowed after the shifted factorization.
pub const MAX_REFINEMENT: usize = 30;
/// Shift applied to the equilibrated constraint block.
pub const DEFAULT_SHIFT: f64 = 1e-10;

/// Solves the assembled saddle-point system and splits the solution into fields.
pub fn solve_saddle(system: &SaddleSystem) -> Result<DiscreteSolution> {
    let o = &system.offsets;
    let blocks = [0, o.u, o.omega, o.p, o.total];
    let (x, residual) = solve_symmetric_indefinite(&system.matrix, &system.rhs, &blocks, DEFAULT_SHIFT)?;
    Ok(system.split(&x, residual))
}
