//! Dunkl kernels for ℤ₂^d and the representing densities 𝒦, 𝒦°.
//!
//! Rank one, with c_γ = Γ(γ+½)/(√π Γ(γ)) and s = sgn x:
//!
//! ```text
//! K(x, t)   = j_{γ-½}(ixt) + xt/(2γ+1) · j_{γ+½}(ixt)
//! 𝒦(x, y)   = c_γ |x|^{-2γ} (|x| - s y)^{γ-1} (|x| + s y)^γ   on (-|x|, |x|)
//! 𝒦°(x, y)  = |x|^{2γ} 𝒦(x, y)
//! ```
//!
//! In the variable t = y/x the density of μ_x is c_γ (1-t)^{γ-1}(1+t)^γ on
//! (-1, 1), so every average against it is a Gauss–Jacobi sum.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{DunklError, Result};
use crate::rootsys::WeightContext;
use crate::scalar::{lit, Real};
use crate::specfun::{cached_jacobi, ln_gamma, normalized_bessel};

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(DunklError::domain(format!("multiplicity must be >= 0, got {gamma}")));
    }
    Ok(())
}

fn check_positive<T: Real>(gamma: T) -> Result<()> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(DunklError::domain(format!(
            "density requires a positive multiplicity, got {gamma}"
        )));
    }
    Ok(())
}

/// K(x, t) for the rank-one Dunkl operator with parameter γ.
pub fn dunkl_kernel_rank1<T: Real>(gamma: T, x: Complex<T>, t: Complex<T>) -> Result<Complex<T>> {
    check_gamma(gamma)?;
    let half = lit::<T>(0.5);
    let xt = x * t;
    let arg = Complex::<T>::i() * xt;
    let even = normalized_bessel(gamma - half, arg)?;
    let odd = normalized_bessel(gamma + half, arg)?;
    Ok(even + xt * odd / (gamma + gamma + T::one()))
}

/// Product kernel ∏_l K_{α_l}(x_l, z_l) on a ℤ₂^d context.
pub fn dunkl_kernel_product<T: Real>(ctx: &WeightContext<T>, x: &[Complex<T>], z: &[Complex<T>]) -> Result<Complex<T>> {
    let alphas = ctx.require_product()?;
    check_len(alphas.len(), x.len())?;
    check_len(alphas.len(), z.len())?;
    let mut acc = Complex::new(T::one(), T::zero());
    for ((&a, &xl), &zl) in alphas.iter().zip(x).zip(z) {
        acc = acc * dunkl_kernel_rank1(a, xl, zl)?;
    }
    Ok(acc)
}

/// Product kernel at real arguments.
pub fn dunkl_kernel_real<T: Real>(ctx: &WeightContext<T>, x: &[T], z: &[T]) -> Result<T> {
    let xc: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let zc: Vec<Complex<T>> = z.iter().map(|&v| Complex::new(v, T::zero())).collect();
    Ok(dunkl_kernel_product(ctx, &xc, &zc)?.re)
}

fn check_len(want: usize, got: usize) -> Result<()> {
    if want != got {
        return Err(DunklError::contract(format!("expected a {want}-vector, got length {got}")));
    }
    Ok(())
}

/// c_γ = Γ(γ+½)/(√π Γ(γ)).
pub fn density_constant<T: Real>(gamma: T) -> Result<T> {
    check_positive(gamma)?;
    let half = lit::<T>(0.5);
    Ok((ln_gamma(gamma + half)? - ln_gamma(gamma)?).exp() / T::PI().sqrt())
}

/// 𝒦°(x, y) at rank one; zero outside |y| < |x| (so zero for x = 0).
pub fn weighted_density_rank1<T: Real>(gamma: T, x: T, y: T) -> Result<T> {
    let c = density_constant(gamma)?;
    Ok(weighted_rank1_unchecked(c, gamma, x, y))
}

#[inline]
fn weighted_rank1_unchecked<T: Real>(c: T, gamma: T, x: T, y: T) -> T {
    let ax = x.abs();
    if !(y.abs() < ax) {
        return T::zero();
    }
    let sy = if x > T::zero() { y } else { -y };
    c * (ax - sy).powf(gamma - T::one()) * (ax + sy).powf(gamma)
}

/// 𝒦(x, y) at rank one.
pub fn density_rank1<T: Real>(gamma: T, x: T, y: T) -> Result<T> {
    if x == T::zero() {
        return Err(DunklError::domain("density undefined at x = 0"));
    }
    Ok(weighted_density_rank1(gamma, x, y)? / x.abs().powf(gamma + gamma))
}

/// Evaluator for 𝒦 and 𝒦° on a ℤ₂^d context.
#[derive(Debug, Clone)]
pub struct KernelDensity<T> {
    alphas: Vec<T>,
    consts: Vec<T>,
    /// ω_k(x) / ∏|x_l|^{2α_l}: 1 for the product convention.
    weight_factor: T,
}

impl<T: Real> KernelDensity<T> {
    pub fn new(ctx: &WeightContext<T>) -> Result<Self> {
        let alphas = ctx.require_product()?.to_vec();
        let consts = alphas.iter().map(|&a| density_constant(a)).collect::<Result<Vec<_>>>()?;
        let ones = vec![T::one(); alphas.len()];
        Ok(Self {
            weight_factor: ctx.weight(&ones),
            alphas,
            consts,
        })
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    /// ω_k(x) / ∏|x_l|^{2α_l}.
    pub fn weight_factor(&self) -> T {
        self.weight_factor
    }

    /// 𝒦(x, y); requires every x_l ≠ 0.
    pub fn density(&self, x: &[T], y: &[T]) -> Result<T> {
        check_len(self.dim(), x.len())?;
        check_len(self.dim(), y.len())?;
        if let Some(l) = x.iter().position(|&v| v == T::zero()) {
            return Err(DunklError::RegularPoint(format!("x_{} = 0", l + 1)));
        }
        Ok(self.density_unchecked(x, y))
    }

    pub(crate) fn density_unchecked(&self, x: &[T], y: &[T]) -> T {
        let mut acc = T::one();
        for l in 0..self.dim() {
            let a = self.alphas[l];
            acc *= weighted_rank1_unchecked(self.consts[l], a, x[l], y[l]) / x[l].abs().powf(a + a);
            if acc == T::zero() {
                break;
            }
        }
        acc
    }

    /// 𝒦°(x, y) = ω_k(x)𝒦(x, y), defined for every x.
    pub fn weighted(&self, x: &[T], y: &[T]) -> Result<T> {
        check_len(self.dim(), x.len())?;
        check_len(self.dim(), y.len())?;
        Ok(self.weighted_unchecked(x, y))
    }

    pub(crate) fn weighted_unchecked(&self, x: &[T], y: &[T]) -> T {
        let mut acc = self.weight_factor;
        for l in 0..self.dim() {
            acc *= weighted_rank1_unchecked(self.consts[l], self.alphas[l], x[l], y[l]);
            if acc == T::zero() {
                break;
            }
        }
        acc
    }

    /// 𝒦_W(x, y) = |W|⁻¹ Σ_w 𝒦(wx, y).
    pub fn group_density(&self, x: &[T], y: &[T]) -> Result<T> {
        self.density(x, y)?;
        let d = self.dim();
        let mut acc = T::zero();
        let mut wx = x.to_vec();
        for mask in 0..(1usize << d) {
            for l in 0..d {
                wx[l] = if mask & (1 << l) != 0 { -x[l] } else { x[l] };
            }
            acc += self.density_unchecked(&wx, y);
        }
        Ok(acc / lit::<T>((1usize << d) as f64))
    }

    /// 𝒦°_W(x, y) = ω_k(x)⁻¹ |W|⁻¹ Σ_w 𝒦°(wx, y).
    pub fn group_weighted_density(&self, x: &[T], y: &[T]) -> Result<T> {
        let d = self.dim();
        check_len(d, x.len())?;
        let mut acc = T::zero();
        let mut wx = x.to_vec();
        for mask in 0..(1usize << d) {
            for l in 0..d {
                wx[l] = if mask & (1 << l) != 0 { -x[l] } else { x[l] };
            }
            acc += self.weighted_unchecked(&wx, y);
        }
        let om = self.weight_factor
            * x.iter()
                .zip(&self.alphas)
                .fold(T::one(), |p, (&v, &a)| p * v.abs().powf(a + a));
        if om == T::zero() {
            return Err(DunklError::RegularPoint("ω_k(x) = 0".into()));
        }
        Ok(acc / (lit::<T>((1usize << d) as f64) * om))
    }
}

/// E[f(t)] for t distributed with density ∏ c_{α_l}(1-t_l)^{α_l-1}(1+t_l)^{α_l}
/// on (-1, 1)^d, using an n-point Gauss–Jacobi rule per axis.
pub(crate) fn product_expectation<T, V, F>(alphas: &[T], n: usize, mut f: F) -> Result<V>
where
    T: Real,
    V: Copy + Zero + std::ops::Mul<T, Output = V>,
    F: FnMut(&[T]) -> V,
{
    let d = alphas.len();
    let mut nodes = Vec::with_capacity(d);
    let mut probs = Vec::with_capacity(d);
    for &a in alphas {
        check_positive(a)?;
        let r = cached_jacobi(n, a - T::one(), a)?;
        nodes.push((0..r.len()).map(|i| r.x(i)).collect::<Vec<T>>());
        probs.push(r.probability_weights());
    }
    if d == 0 {
        return Ok(f(&[]));
    }
    let mut t = vec![T::zero(); d];
    Ok(nested_sum(0, &nodes, &probs, &mut t, &mut f))
}

/// Σ_i p_i (Σ_j q_j (… f)) axis by axis, so that sequentially exact
/// probability vectors reproduce constants exactly.
fn nested_sum<T, V, F>(l: usize, nodes: &[Vec<T>], probs: &[Vec<T>], t: &mut [T], f: &mut F) -> V
where
    T: Real,
    V: Copy + Zero + std::ops::Mul<T, Output = V>,
    F: FnMut(&[T]) -> V,
{
    let mut acc = V::zero();
    for (i, &w) in probs[l].iter().enumerate() {
        t[l] = nodes[l][i];
        let v = if l + 1 == nodes.len() {
            f(t)
        } else {
            nested_sum(l + 1, nodes, probs, t, f)
        };
        acc = acc + v * w;
    }
    acc
}

/// Nodes per axis needed to resolve e^{⟨y,z⟩} over |y_l| ≤ |x_l|.
fn laplace_order<T: Real>(x: &[T], z: &[Complex<T>]) -> usize {
    let s = x
        .iter()
        .zip(z)
        .fold(0.0f64, |m, (&a, b)| m.max(crate::scalar::to_f64(a.abs() * b.norm())));
    (24 + (1.5 * s).ceil() as usize).min(256)
}

/// K(x, z) through its Laplace-type representation ∫ 𝒦(x,y) e^{⟨y,z⟩} dy,
/// as an expectation over the product Jacobi law (y = x∘t).
pub fn kernel_via_laplace<T: Real>(ctx: &WeightContext<T>, x: &[T], z: &[Complex<T>]) -> Result<Complex<T>> {
    let alphas = ctx.require_product()?;
    check_len(alphas.len(), x.len())?;
    check_len(alphas.len(), z.len())?;
    if let Some(l) = x.iter().position(|&v| v == T::zero()) {
        return Err(DunklError::RegularPoint(format!("x_{} = 0", l + 1)));
    }
    let n = laplace_order(x, z);
    product_expectation(alphas, n, |t: &[T]| {
        let mut e = Complex::zero();
        for l in 0..t.len() {
            e = e + z[l] * (x[l] * t[l]);
        }
        e.exp()
    })
}

/// J_W(-ix, z) = |W|⁻¹ Σ_w K(-ix, wz) on ℤ₂^d; equals ∏ j_{α_l-½}(x_l z_l).
pub fn generalized_bessel<T: Real>(ctx: &WeightContext<T>, x: &[T], z: &[Complex<T>]) -> Result<Complex<T>> {
    let alphas = ctx.require_product()?;
    let d = alphas.len();
    check_len(d, x.len())?;
    check_len(d, z.len())?;
    let mx: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(T::zero(), -v)).collect();
    let mut acc = Complex::zero();
    let mut wz = z.to_vec();
    for mask in 0..(1usize << d) {
        for l in 0..d {
            wz[l] = if mask & (1 << l) != 0 { -z[l] } else { z[l] };
        }
        acc = acc + dunkl_kernel_product(ctx, &mx, &wz)?;
    }
    Ok(acc / lit::<T>((1usize << d) as f64))
}

/// E_W(-iz, y) = |W|⁻¹ Σ_w e^{-i⟨y, wz⟩}.
pub fn e_w<T: Real>(ctx: &WeightContext<T>, z: &[Complex<T>], y: &[T]) -> Result<Complex<T>> {
    let d = ctx.dim();
    check_len(d, z.len())?;
    check_len(d, y.len())?;
    let group = ctx.system().group();
    let zr: Vec<T> = z.iter().map(|c| c.re).collect();
    let zi: Vec<T> = z.iter().map(|c| c.im).collect();
    let mut acc = Complex::zero();
    for w in group {
        let (a, b) = (w.apply(&zr), w.apply(&zi));
        let mut s = Complex::zero();
        for l in 0..d {
            s = s + Complex::new(a[l], b[l]) * y[l];
        }
        acc = acc + (-Complex::<T>::i() * s).exp();
    }
    Ok(acc / lit::<T>(group.len() as f64))
}

/// J_W(-ix, z) as ∫ E_W(-iz, y) 𝒦_W(x, y) dy: each term 𝒦(wx, ·) of the
/// group average is integrated with its own product Jacobi rule.
pub fn generalized_bessel_via_density<T: Real>(
    ctx: &WeightContext<T>,
    x: &[T],
    z: &[Complex<T>],
    n: usize,
) -> Result<Complex<T>> {
    let alphas = ctx.require_product()?;
    let d = alphas.len();
    check_len(d, x.len())?;
    if x.iter().any(|&v| v == T::zero()) {
        return Err(DunklError::RegularPoint("J_W density route needs regular x".into()));
    }
    let mut acc = Complex::zero();
    let mut wx = x.to_vec();
    let mut y = vec![T::zero(); d];
    for mask in 0..(1usize << d) {
        for l in 0..d {
            wx[l] = if mask & (1 << l) != 0 { -x[l] } else { x[l] };
        }
        let term: Complex<T> = product_expectation(alphas, n, |t: &[T]| {
            for l in 0..d {
                y[l] = wx[l] * t[l];
            }
            e_w(ctx, z, &y).unwrap_or_else(|_| Complex::new(T::nan(), T::nan()))
        })?;
        acc = acc + term;
    }
    Ok(acc / lit::<T>((1usize << d) as f64))
}
