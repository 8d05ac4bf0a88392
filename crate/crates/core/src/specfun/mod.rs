//! Special functions and quadrature rules.

mod bessel;
mod gamma;
mod quadrature;

pub use bessel::{normalized_bessel, BesselEvaluator, BesselMethod, DEFAULT_SERIES_CUTOFF};
pub use gamma::{beta, gamma, ln_gamma};
#[allow(unused_imports)]
pub(crate) use gamma::{gamma_unchecked, ln_gamma_unchecked};
pub use quadrature::{
    cached_jacobi, gauss_jacobi_rule, gauss_legendre_rule, sphere_area, sphere_rule, Domain, QuadOptions, QuadratureRule,
    TanhSinh,
};
