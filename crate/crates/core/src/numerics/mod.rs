//! Numeric building blocks: Bernstein-basis sums, bracketed root finding
//! and composite Gauss–Legendre quadrature.

pub mod bernstein;
pub mod quadrature;
pub mod roots;

pub use bernstein::{bernstein_sum, bernstein_term, binomial};
pub use quadrature::{GaussLegendre, Integral, QuadratureConfig};
pub use roots::{monotone_root, secant_increasing, RootConfig, SecantOutcome};
