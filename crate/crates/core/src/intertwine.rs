//! The intertwining operator V_k and its dual ᵗV_k on ℤ₂^d.
//!
//! ```text
//! V_k(g)(x)  = E[g(t₁x₁, …, t_dx_d)],  t_l ~ c_{α_l}(1-t)^{α_l-1}(1+t)^{α_l} on (-1, 1)
//! ᵗV_k(f)(y) = ∫ 𝒦°(x, y) f(x) dx over {|x_l| > |y_l| for all l}
//! ```
//!
//! ᵗV_k is integrated coordinate by coordinate: x_l = ±u_l with
//! u_l ∈ (|y_l|, ·), the upper limit cut by the support ball of f. Both signs
//! share one Jacobi rule whose endpoint exponent is α_l − 1 (or 2α_l − 1
//! when y_l = 0).

use crate::error::{DunklError, Result};
use crate::field::{RadialProfile, ScalarField};
use crate::kernel::{density_constant, product_expectation, KernelDensity};
use crate::rootsys::WeightContext;
use crate::scalar::{from_usize, lit, norm, to_f64, CompensatedSum, Real};
use crate::specfun::{cached_jacobi, gamma, gauss_legendre_rule, QuadOptions};

/// A quadrature value with its refinement error and the order that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub order: usize,
}

impl<T: Real> Estimate<T> {
    pub(crate) fn exact(value: T) -> Self {
        Self {
            value,
            error: T::zero(),
            order: 0,
        }
    }
}

/// Largest per-axis order allowed in dimension d (keeps n^d ≤ 2^21).
fn order_cap(d: usize, requested: usize) -> usize {
    let cap = match d {
        0..=2 => 512,
        _ => 128,
    };
    requested.min(cap)
}

/// Doubles the order from `opts.order` until successive (value, L1 mass)
/// pairs agree to `opts.rtol` relative to the L1 mass.
pub(crate) fn adapt<T: Real, F: FnMut(usize) -> Result<(T, T)>>(d: usize, opts: &QuadOptions, mut run: F) -> Result<Estimate<T>> {
    let max = order_cap(d, opts.max_order.max(opts.order));
    let mut n = opts.order.min(max).max(4);
    let (mut prev, _) = run(n)?;
    // below a few ulps the doubling can never settle
    let tol = lit::<T>(opts.rtol).max(T::epsilon() * lit(32.0));
    loop {
        let next = 2 * n;
        if next > max {
            return Err(DunklError::Accuracy {
                estimate: to_f64(prev),
                error: f64::NAN,
                requested: opts.rtol,
            });
        }
        let (cur, abs) = run(next)?;
        let err = (cur - prev).abs();
        if err <= tol * abs {
            return Ok(Estimate {
                value: cur,
                error: err,
                order: next,
            });
        }
        if 2 * next > max {
            return Err(DunklError::Accuracy {
                estimate: to_f64(cur),
                error: to_f64(err),
                requested: opts.rtol,
            });
        }
        prev = cur;
        n = next;
    }
}

/// V_k(g)(x) with a fixed n-point rule per axis.
pub fn vk_fixed<T: Real>(ctx: &WeightContext<T>, g: &ScalarField<T>, x: &[T], n: usize) -> Result<T> {
    Ok(vk_fixed_l1(ctx, g, x, n)?.0)
}

fn vk_fixed_l1<T: Real>(ctx: &WeightContext<T>, g: &ScalarField<T>, x: &[T], n: usize) -> Result<(T, T)> {
    let alphas = ctx.require_product()?;
    check_dim(alphas.len(), x.len())?;
    if x.iter().all(|&v| v == T::zero()) {
        let v = g.eval(x);
        return Ok((v, v.abs()));
    }
    let mut y = vec![T::zero(); x.len()];
    let pair: Pair<T> = product_expectation(alphas, n, |t: &[T]| {
        for l in 0..t.len() {
            y[l] = x[l] * t[l];
        }
        let v = g.eval(&y);
        Pair(v, v.abs())
    })?;
    Ok((pair.0, pair.1))
}

#[derive(Clone, Copy)]
struct Pair<T>(T, T);

impl<T: Real> std::ops::Add for Pair<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

impl<T: Real> std::ops::Mul<T> for Pair<T> {
    type Output = Self;
    fn mul(self, w: T) -> Self {
        Pair(self.0 * w, self.1 * w)
    }
}

impl<T: Real> num_traits::Zero for Pair<T> {
    fn zero() -> Self {
        Pair(T::zero(), T::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero() && self.1.is_zero()
    }
}

fn check_dim(d: usize, got: usize) -> Result<()> {
    if d != got {
        return Err(DunklError::contract(format!("expected a {d}-vector, got length {got}")));
    }
    Ok(())
}

/// V_k(g)(x) with adaptive order; V_k(g)(0) = g(0) exactly.
pub fn vk_estimate<T: Real>(ctx: &WeightContext<T>, g: &ScalarField<T>, x: &[T], opts: &QuadOptions) -> Result<Estimate<T>> {
    let alphas = ctx.require_product()?;
    check_dim(alphas.len(), x.len())?;
    if x.iter().all(|&v| v == T::zero()) {
        return Ok(Estimate::exact(g.eval(x)));
    }
    adapt(x.len(), opts, |n| vk_fixed_l1(ctx, g, x, n))
}

pub fn vk_apply<T: Real>(ctx: &WeightContext<T>, g: &ScalarField<T>, x: &[T], opts: &QuadOptions) -> Result<T> {
    Ok(vk_estimate(ctx, g, x, opts)?.value)
}

struct DualIntegrator<'a, T> {
    f: &'a ScalarField<T>,
    y: &'a [T],
    alphas: &'a [T],
    consts: Vec<T>,
    rules: Vec<std::sync::Arc<crate::specfun::QuadratureRule<T>>>,
    expo: Vec<T>,
    /// Σ_{m<l} y_m² for each l.
    inner_y2: Vec<T>,
    x: Vec<T>,
}

impl<T: Real> DualIntegrator<'_, T> {
    /// Integrates axes 0..=l with rem = R² − Σ_{m>l} x_m²; returns (value, L1).
    fn level(&mut self, l: usize, rem: T) -> (T, T) {
        let lo = self.y[l].abs();
        let room = rem - self.inner_y2[l];
        if !(room > lo * lo) {
            return (T::zero(), T::zero());
        }
        let hi = room.sqrt();
        let rule = self.rules[l].clone();
        let e = self.expo[l];
        let (a, c, yl) = (self.alphas[l], self.consts[l], self.y[l]);
        let half = (hi - lo) * lit(0.5);
        let mid = (hi + lo) * lit(0.5);
        let scale = half.powf(e + T::one());
        let mut acc = CompensatedSum::new();
        let mut abs = T::zero();
        for i in 0..rule.len() {
            let u = mid + half * rule.x(i);
            let sing = (u - lo).powf(e);
            let w = rule.weights()[i] * scale;
            for sign in [T::one(), -T::one()] {
                let sy = sign * yl;
                // 𝒦° factor divided by the endpoint singularity
                let dens = c * (u - sy).powf(a - T::one()) * (u + sy).powf(a) / sing;
                self.x[l] = sign * u;
                let (v, m) = if l == 0 {
                    let v = self.f.eval(&self.x);
                    (v, v.abs())
                } else {
                    self.level(l - 1, rem - u * u)
                };
                acc.add(w * dens * v);
                abs += w * dens * m;
            }
        }
        (acc.value(), abs)
    }
}

fn tvk_fixed_l1<T: Real>(ctx: &WeightContext<T>, f: &ScalarField<T>, y: &[T], radius: T, n: usize) -> Result<(T, T)> {
    let kd = KernelDensity::new(ctx)?;
    let alphas = kd.alphas();
    let d = alphas.len();
    check_dim(d, y.len())?;
    if !(norm(y) < radius) {
        return Ok((T::zero(), T::zero()));
    }
    let mut expo = Vec::with_capacity(d);
    let mut rules = Vec::with_capacity(d);
    let mut consts = Vec::with_capacity(d);
    for l in 0..d {
        let a = alphas[l];
        let e = if y[l] == T::zero() { a + a - T::one() } else { a - T::one() };
        expo.push(e);
        rules.push(cached_jacobi(n, T::zero(), e)?);
        consts.push(density_constant(a)?);
    }
    let mut inner_y2 = vec![T::zero(); d];
    for l in 1..d {
        inner_y2[l] = inner_y2[l - 1] + y[l - 1] * y[l - 1];
    }
    let mut it = DualIntegrator {
        f,
        y,
        alphas,
        consts,
        rules,
        expo,
        inner_y2,
        x: vec![T::zero(); d],
    };
    let (v, m) = it.level(d - 1, radius * radius);
    let wf = kd.weight_factor();
    Ok((v * wf, m * wf))
}

/// ᵗV_k(f)(y) with a fixed n-point rule per axis.
pub fn tvk_fixed<T: Real>(ctx: &WeightContext<T>, f: &ScalarField<T>, y: &[T], n: usize) -> Result<T> {
    let radius = f.require_support()?;
    Ok(tvk_fixed_l1(ctx, f, y, radius, n)?.0)
}

/// ᵗV_k(f)(y) with adaptive order. `f` must declare a support radius.
pub fn tvk_estimate<T: Real>(ctx: &WeightContext<T>, f: &ScalarField<T>, y: &[T], opts: &QuadOptions) -> Result<Estimate<T>> {
    let radius = f.require_support()?;
    ctx.require_product()?;
    check_dim(ctx.dim(), y.len())?;
    if !(norm(y) < radius) {
        return Ok(Estimate::exact(T::zero()));
    }
    adapt(y.len(), opts, |n| tvk_fixed_l1(ctx, f, y, radius, n))
}

pub fn tvk_apply<T: Real>(ctx: &WeightContext<T>, f: &ScalarField<T>, y: &[T], opts: &QuadOptions) -> Result<T> {
    Ok(tvk_estimate(ctx, f, y, opts)?.value)
}

/// ᵗV_k(F(‖·‖))(y) = C ∫_{‖y‖}^∞ F(t)(t² − ‖y‖²)^{γ−1} t dt with
/// C = Γ(γ+d/2) d_k / (π^{d/2} Γ(γ)); integrated in s = t² − ‖y‖².
pub fn tvk_radial<T: Real>(ctx: &WeightContext<T>, profile: &RadialProfile<T>, y: &[T], opts: &QuadOptions) -> Result<T> {
    Ok(tvk_radial_estimate(ctx, profile, y, opts)?.value)
}

pub fn tvk_radial_estimate<T: Real>(
    ctx: &WeightContext<T>,
    profile: &RadialProfile<T>,
    y: &[T],
    opts: &QuadOptions,
) -> Result<Estimate<T>> {
    let g = ctx.gamma();
    if !(g > T::zero()) {
        return Err(DunklError::domain("radial dual formula needs gamma > 0"));
    }
    check_dim(ctx.dim(), y.len())?;
    let radius = profile
        .support_radius()
        .ok_or_else(|| DunklError::contract("radial profile needs a support radius"))?;
    let y2 = crate::scalar::dot(y, y);
    let top = radius * radius - y2;
    if !(top > T::zero()) {
        return Ok(Estimate::exact(T::zero()));
    }
    let half_d = from_usize::<T>(ctx.dim()) * lit(0.5);
    let c = gamma(g + half_d)? * ctx.sphere_mass() / (T::PI().powf(half_d) * gamma(g)?);
    let c = c * lit(0.5);
    adapt(1, opts, |n| {
        let rule = cached_jacobi(n, T::zero(), g - T::one())?;
        let half = top * lit(0.5);
        let scale = half.powf(g);
        let mut acc = CompensatedSum::new();
        let mut abs = T::zero();
        for i in 0..rule.len() {
            let s = half + half * rule.x(i);
            let v = rule.weights()[i] * profile.eval((y2 + s).sqrt());
            acc.add(v);
            abs += v.abs();
        }
        Ok((c * scale * acc.value(), c * scale * abs))
    })
}

/// e^{-a‖y‖²} / (a^γ π^{d/2} c_k).
pub fn tvk_gaussian_reference<T: Real>(ctx: &WeightContext<T>, a: T, y: &[T]) -> Result<T> {
    if !(a > T::zero()) {
        return Err(DunklError::domain("Gaussian parameter must be positive"));
    }
    check_dim(ctx.dim(), y.len())?;
    let half_d = from_usize::<T>(ctx.dim()) * lit(0.5);
    Ok((-a * crate::scalar::dot(y, y)).exp() / (a.powf(ctx.gamma()) * T::PI().powf(half_d) * ctx.mehta()))
}

/// (∫ ᵗV_k(f)(y) g(y) dy, ∫ V_k(g)(x) f(x) ω_k(x) dx), each with fixed
/// orders: `opts.order` nodes per axis for the outer integral and for the
/// inner operator.
pub fn duality_pair<T: Real>(
    ctx: &WeightContext<T>,
    f: &ScalarField<T>,
    g: &ScalarField<T>,
    opts: &QuadOptions,
) -> Result<(T, T)> {
    let radius = f.require_support()?;
    ctx.require_product()?;
    let d = ctx.dim();
    let n = opts.order;
    // left: Gauss–Legendre on [-R, 0] ∪ [0, R] per axis
    let gl = gauss_legendre_rule::<T>(n)?;
    let half = radius * lit(0.5);
    let mut pts: Vec<(T, T)> = Vec::with_capacity(2 * n);
    for i in 0..gl.len() {
        for sign in [-T::one(), T::one()] {
            pts.push((sign * (half + half * gl.x(i)), gl.weights()[i] * half));
        }
    }
    let mut left = CompensatedSum::new();
    let mut idx = vec![0usize; d];
    let mut y = vec![T::zero(); d];
    'outer: loop {
        let mut w = T::one();
        for l in 0..d {
            y[l] = pts[idx[l]].0;
            w *= pts[idx[l]].1;
        }
        if norm(&y) < radius {
            let gy = g.eval(&y);
            if gy != T::zero() {
                left.add(w * gy * tvk_fixed_l1(ctx, f, &y, radius, n)?.0);
            }
        }
        for l in 0..d {
            idx[l] += 1;
            if idx[l] < pts.len() {
                continue 'outer;
            }
            idx[l] = 0;
        }
        break;
    }
    // right: polar integration of V_k(g) f ω_k
    let (c2, f2, g2) = (ctx.clone(), f.clone(), g.clone());
    let integrand = ScalarField::new("Vk(g) f", move |x: &[T]| {
        let fx = f2.eval(x);
        if fx == T::zero() {
            return T::zero();
        }
        fx * vk_fixed(&c2, &g2, x, n).unwrap_or_else(|_| T::nan())
    })
    .with_support(radius);
    let right = ctx.polar_integrate(&integrand, opts)?;
    Ok((left.value(), right))
}

/// (ᵗV_k(f)(ry), r^{2γ} ᵗV_k(f_r)(y)) with f_r(x) = f(rx).
pub fn homogeneity_check<T: Real>(
    ctx: &WeightContext<T>,
    f: &ScalarField<T>,
    r: T,
    y: &[T],
    opts: &QuadOptions,
) -> Result<(T, T)> {
    if !(r > T::zero()) {
        return Err(DunklError::domain("dilation factor must be positive"));
    }
    let ry: Vec<T> = y.iter().map(|&v| v * r).collect();
    let lhs = tvk_apply(ctx, f, &ry, opts)?;
    let rhs = r.powf(ctx.gamma() + ctx.gamma()) * tvk_apply(ctx, &f.dilate(r), y, opts)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::catalog::*;
    use crate::kernel::dunkl_kernel_real;

    fn close(a: f64, b: f64, rtol: f64) {
        assert!((a - b).abs() <= rtol * b.abs().max(1e-300), "{a} vs {b}");
    }

    fn opts() -> QuadOptions {
        QuadOptions::default()
    }

    #[test]
    fn vk_examples() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        close(vk_apply(&ctx, &constant(1.0), &[0.8], &opts()).unwrap(), 1.0, 1e-15);
        close(vk_apply(&ctx, &identity(), &[1.0], &opts()).unwrap(), 1.0 / 3.0, 1e-13);
        close(
            vk_apply(&ctx, &exponential(vec![1.0]), &[1.0], &opts()).unwrap(),
            1f64.cosh(),
            1e-13,
        );
        let g = cosine(vec![2.0]);
        assert_eq!(vk_apply(&ctx, &g, &[0.0], &opts()).unwrap(), 1.0);
    }

    #[test]
    fn vk_of_exponential_is_kernel_in_two_dims() {
        let ctx = WeightContext::<f64>::z2(&[0.4, 1.7]).unwrap();
        let z = vec![0.9, -1.3];
        for x in [[1.2, -0.6], [0.0, 1.5], [-1.9, 0.3]] {
            let v = vk_apply(&ctx, &exponential(z.clone()), &x, &opts()).unwrap();
            close(v, dunkl_kernel_real(&ctx, &x, &z).unwrap(), 1e-10);
        }
    }

    #[test]
    fn tvk_examples() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        let f = gaussian(1.0).with_support(8.0);
        close(tvk_apply(&ctx, &f, &[0.0], &opts()).unwrap(), 0.5, 1e-9);
        close(tvk_apply(&ctx, &f, &[1.0], &opts()).unwrap(), (-1f64).exp() / 2.0, 1e-9);
        assert_eq!(
            tvk_apply(&ctx, &constant(0.0).with_support(2.0), &[0.3], &opts()).unwrap(),
            0.0
        );
        assert_eq!(tvk_apply(&ctx, &bump(1.0), &[1.5], &opts()).unwrap(), 0.0);
        assert!(matches!(
            tvk_apply(&ctx, &gaussian(1.0), &[0.0], &opts()),
            Err(DunklError::Contract(_))
        ));
    }

    #[test]
    fn tvk_gaussian_in_two_dims() {
        let ctx = WeightContext::<f64>::z2(&[0.6, 1.3]).unwrap();
        let a = 1.5;
        let f = gaussian(a).with_support(gaussian_cutoff(a));
        for y in [[0.0, 0.0], [0.4, -0.7], [-1.1, 0.2]] {
            let want = tvk_gaussian_reference(&ctx, a, &y).unwrap();
            close(tvk_apply(&ctx, &f, &y, &opts()).unwrap(), want, 1e-8);
            close(tvk_radial(&ctx, f.profile().unwrap(), &y, &opts()).unwrap(), want, 1e-9);
        }
    }

    #[test]
    fn radial_examples() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        let p = gaussian_profile(1.0).with_support(8.0);
        close(tvk_radial(&ctx, &p, &[0.0], &opts()).unwrap(), 0.5, 1e-12);
        let ctx2 = WeightContext::<f64>::z2(&[1.0, 1.0]).unwrap();
        close(tvk_radial(&ctx2, &p, &[0.0, 0.0], &opts()).unwrap(), 0.25, 1e-12);
        let zero = RadialProfile::new("0", |_t: f64| 0.0).with_support(1.0);
        assert_eq!(tvk_radial(&ctx2, &zero, &[0.1, 0.1], &opts()).unwrap(), 0.0);
        assert!(tvk_radial(&WeightContext::<f64>::rank_one(0.0).unwrap(), &p, &[0.0], &opts()).is_err());
    }

    #[test]
    fn gaussian_reference_examples() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        close(tvk_gaussian_reference(&ctx, 1.0, &[0.0]).unwrap(), 0.5, 1e-14);
        close(tvk_gaussian_reference(&ctx, 1.0, &[1.0]).unwrap(), 0.1839397206, 1e-9);
        let ctx2 = WeightContext::<f64>::z2(&[1.0, 1.0]).unwrap();
        close(tvk_gaussian_reference(&ctx2, 2.0, &[0.0, 0.0]).unwrap(), 1.0 / 16.0, 1e-14);
    }

    #[test]
    fn duality_rank_one() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        let f = bump(2.0);
        let o = QuadOptions { order: 48, ..opts() };
        let (l, r) = duality_pair(&ctx, &f, &constant(1.0), &o).unwrap();
        let mass = ctx.polar_integrate(&f, &opts()).unwrap();
        close(l, mass, 1e-7);
        close(r, mass, 1e-9);
        let (l, r) = duality_pair(&ctx, &f, &cosine(vec![1.0]), &o).unwrap();
        close(l, r, 1e-7);
        let zero = constant(0.0).with_support(1.0);
        assert_eq!(duality_pair(&ctx, &zero, &cosine(vec![1.0]), &o).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn homogeneity_rank_one() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        let f = gaussian(1.0).with_support(3.0);
        let (a, b) = homogeneity_check(&ctx, &f, 1.0, &[0.3], &opts()).unwrap();
        assert_eq!(a, b);
        let (a, b) = homogeneity_check(&ctx, &f, 2.0, &[0.3], &opts()).unwrap();
        close(a, b, 1e-7);
    }
}
