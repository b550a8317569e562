//! Polynomial exact solutions on the unit square and cube.

use serde::Serialize;

use crate::error::{McsError, Result};
use crate::poly::{curl, div, eps, grad, kappa, CurlKind, FieldShape, PolyField, Polynomial};

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub dim: usize,
    pub nu: f64,
    pub u: PolyField,
    pub grad_u: PolyField,
    pub sigma: PolyField,
    pub p: Polynomial,
    /// Skew matrix field `kappa(curl u)`.
    pub omega: PolyField,
    pub f: PolyField,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Degrees {
    pub u: usize,
    pub sigma: usize,
    pub p: usize,
    pub f: usize,
}

fn coord(dim: usize, a: usize) -> Polynomial {
    Polynomial::coordinate(dim, a)
}

/// `x^2 (x - 1)^2` in variable `a`.
fn double_root(dim: usize, a: usize) -> Polynomial {
    let x = coord(dim, a);
    let xm1 = x.axpy(-1.0, &Polynomial::constant(dim, 1.0));
    x.pow(2).mul(&xm1.pow(2))
}

/// The stream function `prod_a x_a^2 (x_a - 1)^2`.
pub fn stream_function(dim: usize) -> Polynomial {
    (1..dim).fold(double_root(dim, 0), |acc, a| acc.mul(&double_root(dim, a)))
}

/// `sum_a x_a^5 - d / 6`, which has zero mean on the unit cube.
pub fn quintic_pressure(dim: usize) -> Polynomial {
    let s = (0..dim).fold(Polynomial::zero(dim), |acc, a| acc.axpy(1.0, &coord(dim, a).pow(5)));
    s.axpy(-(dim as f64) / 6.0, &Polynomial::constant(dim, 1.0))
}

/// Integral of a polynomial over `[0, 1]^dim`.
pub fn integrate_unit_cube(p: &Polynomial) -> f64 {
    p.terms().map(|(e, c)| c / e.iter().take(p.dim()).map(|&a| a as f64 + 1.0).product::<f64>()).sum()
}

fn curl_of_vorticity(u: &PolyField) -> Result<PolyField> {
    match u.dim() {
        2 => curl(u, CurlKind::VectorToScalar2d),
        _ => curl(u, CurlKind::Vector3d),
    }
}

impl ExactSolution {
    /// Builds all derived fields from `u` and `p` and verifies the invariants.
    pub fn from_velocity_pressure(u: PolyField, p: Polynomial, nu: f64) -> Result<Self> {
        let dim = u.dim();
        let grad_u = grad(&u)?;
        let sigma = eps(&u)?.scale(nu);
        let omega = kappa(&curl_of_vorticity(&u)?)?;
        let gp = grad(&PolyField::scalar(p.clone()))?;
        let f = div(&sigma)?.scale(-1.0).axpy(1.0, &gp);
        let s = Self { dim, nu, u, grad_u, sigma, p, omega, f };
        s.check()?;
        Ok(s)
    }

    pub fn degrees(&self) -> Degrees {
        Degrees { u: self.u.degree(), sigma: self.sigma.degree(), p: self.p.degree(), f: self.f.degree() }
    }

    /// Coefficient-level checks of the structural identities.
    pub fn check(&self) -> Result<()> {
        let scale = self.u.max_abs_coeff().max(self.p.max_abs_coeff()).max(1.0);
        let tol = 1e-12 * scale;
        let fail = |what: &str| Err(McsError::Shape(format!("exact solution violates {what}")));
        if div(&self.u)?.max_abs_coeff() > tol {
            return fail("div u = 0");
        }
        if self.sigma.trace()?.max_abs_coeff() > tol {
            return fail("tr sigma = 0");
        }
        if self.sigma.axpy(-1.0, &self.sigma.transpose()?).max_abs_coeff() > tol {
            return fail("sigma = sigma^T");
        }
        let split = eps(&self.u)?.axpy(1.0, &self.omega);
        if split.axpy(-1.0, &self.grad_u).max_abs_coeff() > tol {
            return fail("grad u = eps(u) + kappa(curl u)");
        }
        if integrate_unit_cube(&self.p).abs() > tol {
            return fail("zero mean pressure");
        }
        let residual = div(&self.sigma)?.scale(-1.0).axpy(1.0, &grad(&PolyField::scalar(self.p.clone()))?);
        if residual.axpy(-1.0, &self.f).max_abs_coeff() > tol {
            return fail("f = -div sigma + grad p");
        }
        Ok(())
    }

    /// Same solution with `p` and `f` augmented by `scale` times the quintic gradient.
    pub fn with_extra_gradient(&self, scale: f64) -> Result<Self> {
        let q = quintic_pressure(self.dim);
        let p = self.p.axpy(scale, &q);
        Self::from_velocity_pressure(self.u.clone(), p, self.nu)
    }

    /// Largest coefficient of `u` restricted to the faces of the unit cube.
    pub fn boundary_trace_max(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for side in [0.0, 1.0] {
                let subs: Vec<Polynomial> =
                    (0..d).map(|b| if b == a { Polynomial::constant(d, side) } else { coord(d, b) }).collect();
                for comp in &self.u.entries {
                    worst = worst.max(comp.compose(&subs).max_abs_coeff());
                }
            }
        }
        worst
    }
}

/// Smooth solution with velocity `curl psi`, quintic pressure and viscosity `nu`.
pub fn exact_fields(dim: usize, nu: f64) -> Result<ExactSolution> {
    if !(2..=3).contains(&dim) {
        return Err(McsError::Unsupported(format!("manufactured solution in dimension {dim}")));
    }
    if !(nu > 0.0) {
        return Err(McsError::Unsupported(format!("viscosity must be positive, got {nu}")));
    }
    let psi = stream_function(dim);
    let u = if dim == 2 {
        curl(&PolyField::scalar(psi), CurlKind::ScalarToVector2d)?
    } else {
        curl(&PolyField::vector(vec![psi.clone(), psi.clone(), psi]), CurlKind::Vector3d)?
    };
    ExactSolution::from_velocity_pressure(u, quintic_pressure(dim), nu)
}

/// Zero flow driven by a pure gradient force.
pub fn gradient_forcing_case(dim: usize, nu: f64) -> Result<ExactSolution> {
    if !(2..=3).contains(&dim) {
        return Err(McsError::Unsupported(format!("manufactured solution in dimension {dim}")));
    }
    let u = PolyField::zero(FieldShape::Vector(dim), dim);
    ExactSolution::from_velocity_pressure(u, quintic_pressure(dim), nu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_values() {
        let s = exact_fields(2, 1e-3).unwrap();
        let u = s.u.eval(&[0.5, 0.5]);
        assert!(u[0].abs() < 1e-16 && u[1].abs() < 1e-16);
        assert!((s.p.eval(&[1.0, 1.0]) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.boundary_trace_max(), 0.0);
        assert!(s.degrees().f <= 5);
    }

    #[test]
    fn three_dimensional_degrees() {
        let s = exact_fields(3, 1e-3).unwrap();
        assert!(s.degrees().f <= 11);
        assert_eq!(s.degrees().u, 11);
        assert_eq!(s.boundary_trace_max(), 0.0);
        assert!(integrate_unit_cube(&s.p).abs() < 1e-15);
    }

    #[test]
    fn gradient_forcing_values() {
        let s = gradient_forcing_case(2, 1e-3).unwrap();
        assert_eq!(s.f.eval(&[1.0, 0.0]), vec![5.0, 0.0]);
        assert!(s.sigma.is_zero() && s.omega.is_zero() && s.u.is_zero());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(exact_fields(4, 1e-3).is_err());
        assert!(exact_fields(2, 0.0).is_err());
    }
}
