//! Discrete error norms against a polynomial exact solution.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::fespace::{interpolate_rt, ElementGeometry, FeSpace};
use crate::forms::{DiscreteSolution, Spaces};
use crate::manufactured::ExactSolution;
use crate::mesh::{Mesh, Point};
use crate::poly::monomial::table;
use crate::poly::quadrature::MAX_QUAD_DEGREE;
use crate::poly::{div, eps, grad, skew, PolyField, Polynomial};
use crate::postproc::PostProcessed;

/// Errors of one solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorSet {
    /// Broken `L2` norm of `grad u - grad u*`.
    pub err_grad_ustar: f64,
    pub err_l2_ustar: f64,
    /// `|u - u*|_{1,h,eps}`.
    pub err_eps_ustar: f64,
    pub err_sigma: f64,
    pub err_p: f64,
    pub err_omega: f64,
    /// Largest `|div u_h|` at quadrature points.
    pub div_uh_max: f64,
    pub div_ustar_max: f64,
    /// `|I u - u_h|_{1,h,eps}` with the Raviart-Thomas interpolant.
    pub supercvg: f64,
    pub norm_uh: f64,
    pub norm_ustar: f64,
    pub norm_sigma: f64,
    pub norm_omega: f64,
    /// `|Pi^k skew(sigma_h)|`.
    pub skew_sigma: f64,
}

/// Monomial values at a point, reused for every polynomial evaluated there.
pub(crate) struct Monomials {
    dim: usize,
    n: usize,
    vals: Vec<f64>,
}

impl Monomials {
    pub(crate) fn new(dim: usize, degree: usize) -> Self {
        Self { dim, n: table(dim).count(degree), vals: Vec::new() }
    }

    pub(crate) fn at(&mut self, x: &[f64]) -> &mut Self {
        table(self.dim).values(&x[..self.dim], self.n, &mut self.vals);
        self
    }

    pub(crate) fn eval(&self, f: &PolyField) -> Vec<f64> {
        f.entries.iter().map(|p| self.scalar(p)).collect()
    }

    pub(crate) fn scalar(&self, p: &Polynomial) -> f64 {
        debug_assert!(p.coeffs().len() <= self.vals.len(), "polynomial degree above tabulated monomials");
        p.eval_with(&self.vals)
    }
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Quadrature exactness used for error integrals.
pub fn error_quad_degree(dim: usize, k: usize, exact: &ExactSolution) -> usize {
    (2 * exact.degrees().u.max(k + 2)).min(MAX_QUAD_DEGREE[dim])
}

/// Local discrete fields of one element, all in `xi`.
struct Local {
    geom: ElementGeometry,
    ustar: PolyField,
    diff: PolyField,
}

#[derive(Default)]
struct Sums {
    grad_ustar: f64,
    l2_ustar: f64,
    eps_ustar: f64,
    sigma: f64,
    p: f64,
    omega: f64,
    div_uh: f64,
    div_ustar: f64,
    supercvg: f64,
    uh: f64,
    ustar: f64,
    sigma_h: f64,
    omega_h: f64,
    skew: f64,
}

/// Squared `L2(T)` norm of the skew-matrix projection of `skew(sigma)` onto `P^k`.
fn projected_skew(geom: &ElementGeometry, spaces: &Spaces, sigma: &PolyField) -> Result<f64> {
    let eta = spaces.vorticity.local_basis(geom)?;
    let s = skew(sigma)?;
    let qp = geom.volume_points(2 * spaces.k + 1)?;
    let n = eta.len();
    let mut m = Monomials::new(geom.dim, spaces.k + 1);
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for q in 0..qp.len() {
        m.at(&qp.xi[q]);
        let sv = m.eval(&s);
        let ev: Vec<Vec<f64>> = eta.iter().map(|e| m.eval(e)).collect();
        for i in 0..n {
            r[i] += qp.w[q] * ev[i].iter().zip(&sv).map(|(a, b)| a * b).sum::<f64>();
            for j in 0..n {
                g[(i, j)] += qp.w[q] * ev[i].iter().zip(&ev[j]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    let c = g.cholesky().map(|c| c.solve(&r)).unwrap_or_else(|| DVector::zeros(n));
    Ok(c.dot(&r).max(0.0))
}

fn tangential(v: &[f64], n: &Point) -> Vec<f64> {
    let vn: f64 = v.iter().zip(n).map(|(a, b)| a * b).sum();
    v.iter().zip(n).map(|(a, b)| a - vn * b).collect()
}

/// Sum of `h^{-1} |[w_t]|^2_F` over all facets, `h` the mesh size, `field` giving the one-sided values;
/// boundary facets use the single trace.
fn facet_jumps<F>(mesh: &Mesh, locals: &[Local], degree: usize, field: F) -> Result<f64>
where
    F: Fn(&Local, &Monomials) -> Vec<f64> + Sync,
{
    let d = mesh.dim;
    let parts: Vec<f64> = (0..mesh.facets.len())
        .into_par_iter()
        .map(|f| {
            let facet = &mesh.facets[f];
            let owner = &locals[facet.elements[0]];
            let qp = owner.geom.facet_points(facet.local_index[0], degree)?;
            let mut m = Monomials::new(d, degree);
            let mut acc = 0.0;
            for q in 0..qp.len() {
                let x = &qp.x[q][..d];
                let mut jump = field(owner, m.at(&qp.xi[q]));
                if let Some(&e1) = facet.elements.get(1) {
                    let other = &locals[e1];
                    let xi = other.geom.to_local(x);
                    let v = field(other, m.at(&xi));
                    jump.iter_mut().zip(v).for_each(|(a, b)| *a -= b);
                }
                acc += qp.w[q] * sq(&tangential(&jump, &facet.normal));
            }
            Ok(acc / mesh.h)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// All error norms for one solve.
pub fn compute_errors(
    mesh: &Mesh,
    spaces: &Spaces,
    exact: &ExactSolution,
    sol: &DiscreteSolution,
    post: &PostProcessed,
) -> Result<ErrorSet> {
    let d = mesh.dim;
    let k = spaces.k;
    let degree = error_quad_degree(d, k, exact);
    let exact_degree = exact.degrees().u.max(exact.degrees().p).max(exact.degrees().sigma);
    let interp = interpolate_rt(mesh, &spaces.velocity, &exact.u)?;
    let diff: Vec<f64> = interp.iter().zip(&sol.u).map(|(a, b)| a - b).collect();
    let eps_u = eps(&exact.u)?;
    let p_exact = PolyField::scalar(exact.p.clone());

    let results: Vec<(Local, Sums)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geom = ElementGeometry::new(mesh, e)?;
            let inv = 1.0 / geom.scale;
            let uh = spaces.velocity.local_field(&geom, &sol.u)?;
            let ustar = post.space.local_field(&geom, &post.coeffs)?;
            let dloc = spaces.velocity.local_field(&geom, &diff)?;
            let sigma = spaces.stress.local_field(&geom, &sol.sigma)?;
            let omega = spaces.vorticity.local_field(&geom, &sol.omega)?;
            let p = spaces.pressure.local_field(&geom, &sol.p)?;
            let grad_ustar = grad(&ustar)?.scale(inv);
            let eps_ustar = eps(&ustar)?.scale(inv);
            let eps_diff = eps(&dloc)?.scale(inv);
            let div_uh = div(&uh)?.scale(inv);
            let div_ustar = div(&ustar)?.scale(inv);

            let qp = geom.volume_points(degree)?;
            let mut mx = Monomials::new(d, exact_degree);
            let mut mxi = Monomials::new(d, k + 2);
            let mut s = Sums::default();
            for q in 0..qp.len() {
                let w = qp.w[q];
                mx.at(&qp.x[q]);
                mxi.at(&qp.xi[q]);
                let ux = mx.eval(&exact.u);
                let us = mxi.eval(&ustar);
                let sh = mxi.eval(&sigma);
                let oh = mxi.eval(&omega);
                let uhv = mxi.eval(&uh);
                s.grad_ustar += w * sq_diff(&mx.eval(&exact.grad_u), &mxi.eval(&grad_ustar));
                s.l2_ustar += w * sq_diff(&ux, &us);
                s.eps_ustar += w * sq_diff(&mx.eval(&eps_u), &mxi.eval(&eps_ustar));
                s.sigma += w * sq_diff(&mx.eval(&exact.sigma), &sh);
                s.p += w * sq_diff(&mx.eval(&p_exact), &mxi.eval(&p));
                s.omega += w * sq_diff(&mx.eval(&exact.omega), &oh);
                s.supercvg += w * sq(&mxi.eval(&eps_diff));
                s.uh += w * sq(&uhv);
                s.ustar += w * sq(&us);
                s.sigma_h += w * sq(&sh);
                s.omega_h += w * sq(&oh);
                s.div_uh = s.div_uh.max(mxi.eval(&div_uh)[0].abs());
                s.div_ustar = s.div_ustar.max(mxi.eval(&div_ustar)[0].abs());
            }
            s.skew = projected_skew(&geom, spaces, &sigma)?;
            Ok((Local { geom, ustar, diff: dloc }, s))
        })
        .collect::<Result<_>>()?;

    let (locals, sums): (Vec<Local>, Vec<Sums>) = results.into_iter().unzip();
    let mut t = Sums::default();
    for s in &sums {
        t.grad_ustar += s.grad_ustar;
        t.l2_ustar += s.l2_ustar;
        t.eps_ustar += s.eps_ustar;
        t.sigma += s.sigma;
        t.p += s.p;
        t.omega += s.omega;
        t.supercvg += s.supercvg;
        t.uh += s.uh;
        t.ustar += s.ustar;
        t.sigma_h += s.sigma_h;
        t.omega_h += s.omega_h;
        t.skew += s.skew;
        t.div_uh = t.div_uh.max(s.div_uh);
        t.div_ustar = t.div_ustar.max(s.div_ustar);
    }
    // the exact velocity is continuous, so only the discrete traces jump
    let jump_ustar = facet_jumps(mesh, &locals, degree, |l, m| m.eval(&l.ustar))?;
    let jump_diff = facet_jumps(mesh, &locals, degree, |l, m| m.eval(&l.diff))?;
    Ok(ErrorSet {
        err_grad_ustar: t.grad_ustar.sqrt(),
        err_l2_ustar: t.l2_ustar.sqrt(),
        err_eps_ustar: (t.eps_ustar + jump_ustar).sqrt(),
        err_sigma: t.sigma.sqrt(),
        err_p: t.p.sqrt(),
        err_omega: t.omega.sqrt(),
        div_uh_max: t.div_uh,
        div_ustar_max: t.div_ustar,
        supercvg: (t.supercvg + jump_diff).sqrt(),
        norm_uh: t.uh.sqrt(),
        norm_ustar: t.ustar.sqrt(),
        norm_sigma: t.sigma_h.sqrt(),
        norm_omega: t.omega_h.sqrt(),
        skew_sigma: t.skew.sqrt(),
    })
}

/// `L2` norm of a discrete field given by global coefficients.
pub fn l2_norm(mesh: &Mesh, space: &FeSpace, coeffs: &[f64]) -> Result<f64> {
    let parts: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geom = ElementGeometry::new(mesh, e)?;
            let f = space.local_field(&geom, coeffs)?;
            let qp = geom.volume_points(2 * f.degree())?;
            let mut m = Monomials::new(mesh.dim, f.degree());
            Ok((0..qp.len()).map(|q| qp.w[q] * sq(&m.at(&qp.xi[q]).eval(&f))).sum())
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// Experimental order of convergence between two levels; `None` when undefined.
pub fn eoc(e_prev: f64, e: f64, h_prev: f64, h: f64) -> Option<f64> {
    let r = (e_prev / e).ln() / (h_prev / h).ln();
    (e_prev > 0.0 && e > 0.0 && r.is_finite()).then_some(r)
}
