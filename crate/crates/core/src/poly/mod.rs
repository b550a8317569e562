//! Exact polynomial calculus, field operators and simplex quadrature.

pub mod field;
pub mod monomial;
mod polynomial;
pub mod quadrature;

pub use field::{curl, dev, dev_value, div, eps, grad, kappa, skew, CurlKind, FieldShape, PolyField};
pub use polynomial::Polynomial;
pub use quadrature::{cached_rule, quad_rule, QuadRule};
