//! Dunkl operators T_j.

use crate::error::{DunklError, Result};
use crate::rootsys::WeightContext;
use crate::scalar::{dot, lit, norm, Real};
use crate::specfun::QuadOptions;

pub use crate::field::{catalog, RadialProfile, ScalarField, Smoothness};

/// Relative distance to a wall below which the difference quotient is
/// replaced by its limit.
const WALL_EPS: f64 = 1e-8;

/// T_j f(x) = ∂_j f(x) + Σ_{α∈R₊} k(α) α_j (f(x) − f(σ_α x)) / ⟨α, x⟩.
///
/// `j` is zero-based.
pub fn dunkl_apply<T: Real>(ctx: &WeightContext<T>, j: usize, f: &ScalarField<T>, x: &[T]) -> Result<T> {
    let d = ctx.dim();
    if x.len() != d {
        return Err(DunklError::contract(format!("expected a {d}-vector")));
    }
    if j >= d {
        return Err(DunklError::contract(format!("coordinate index {j} out of range for d = {d}")));
    }
    let grad = f.gradient(x);
    let fx = f.eval(x);
    let near = lit::<T>(WALL_EPS) * norm(x);
    let mut acc = grad[j];
    for (alpha, &k) in ctx.system().positive_roots().zip(ctx.k_positive()) {
        if k == T::zero() || alpha[j] == T::zero() {
            continue;
        }
        let ax = dot(alpha, x);
        let q = if ax.abs() <= near {
            dot(&grad, alpha)
        } else {
            let c = (ax + ax) / dot(alpha, alpha);
            let sx: Vec<T> = x.iter().zip(alpha).map(|(&v, &a)| v - c * a).collect();
            (fx - f.eval(&sx)) / ax
        };
        acc += k * alpha[j] * q;
    }
    Ok(acc)
}

/// (T_1 f(x), …, T_d f(x)).
pub fn dunkl_gradient<T: Real>(ctx: &WeightContext<T>, f: &ScalarField<T>, x: &[T]) -> Result<Vec<T>> {
    (0..ctx.dim()).map(|j| dunkl_apply(ctx, j, f, x)).collect()
}

/// ∫ T_j f · g ω_k dx + ∫ T_j g · f ω_k dx for compactly supported `f`.
pub fn antisymmetry_pair<T: Real>(
    ctx: &WeightContext<T>,
    j: usize,
    f: &ScalarField<T>,
    g: &ScalarField<T>,
    opts: &QuadOptions,
) -> Result<T> {
    let radius = f.require_support()?;
    if j >= ctx.dim() {
        return Err(DunklError::contract(format!("coordinate index {j} out of range")));
    }
    let (c, f2, g2) = (ctx.clone(), f.clone(), g.clone());
    let integrand = ScalarField::new("antisymmetry", move |x: &[T]| {
        let a = dunkl_apply(&c, j, &f2, x).unwrap_or_else(|_| T::nan());
        let b = dunkl_apply(&c, j, &g2, x).unwrap_or_else(|_| T::nan());
        a * g2.eval(x) + b * f2.eval(x)
    })
    .with_support(radius);
    ctx.polar_integrate(&integrand, opts)
}
