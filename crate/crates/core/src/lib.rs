//! Numerical Dunkl analysis: kernels, the intertwining operator and its dual
//! through their representing densities, and identity verification.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod applications;
pub mod density;
pub mod error;
pub mod field;
pub mod intertwine;
pub mod kernel;
pub mod operators;
pub mod rootsys;
pub mod scalar;
pub mod specfun;
pub mod verify;

pub use error::{DunklError, Result};
pub use scalar::Real;

pub type Context = rootsys::WeightContext<f64>;
pub type Context32 = rootsys::WeightContext<f32>;
pub type RootSystem = rootsys::RootSystem<f64>;
pub type Field = field::ScalarField<f64>;
pub type Field32 = field::ScalarField<f32>;
pub type Profile = field::RadialProfile<f64>;
pub type Density = kernel::KernelDensity<f64>;
pub type Density32 = kernel::KernelDensity<f32>;
pub type Rule = specfun::QuadratureRule<f64>;
