//! Riemann–Lebesgue decay, spherical means of V_k and generalized translations.
//!
//! Rank one, t ~ c(1-t)^{γ-1}(1+t)^γ on (-1, 1):
//!
//! ```text
//! τ_x f(y) = ½ E[f(S)(1 + (x+y)/S)] + ½ E[f(-S)(1 - (x+y)/S)],  S = √(x² + y² + 2xyt)
//! ```
//!
//! Radial f = F(‖·‖) on ℤ₂^d, t_l ~ c(1-t)^{α_l-1}(1+t)^{α_l}:
//!
//! ```text
//! τ_x f(y) = E[F(√(‖x‖² + ‖y‖² + 2 Σ x_l y_l t_l))]
//! ```

use num_complex::Complex;

use crate::error::{DunklError, Result};
use crate::field::{RadialProfile, ScalarField};
use crate::intertwine::{adapt, vk_estimate, Estimate};
use crate::kernel::{dunkl_kernel_product, generalized_bessel, product_expectation};
use crate::rootsys::WeightContext;
use crate::scalar::{from_usize, lit, norm, CompensatedSum, Real};
use crate::specfun::{cached_jacobi, gamma, sphere_rule, QuadOptions};

/// Shell maxima of |K(-ix, z)| and |J_W(-ix, z)| over ‖z‖ = R.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayScan<T> {
    pub x: Vec<T>,
    pub radii: Vec<T>,
    /// ω_k(x).
    pub weight: T,
    pub kernel: Vec<T>,
    pub bessel: Vec<T>,
}

impl<T: Real> DecayScan<T> {
    pub fn weighted_kernel(&self) -> Vec<T> {
        self.kernel.iter().map(|&v| v * self.weight).collect()
    }

    pub fn weighted_bessel(&self) -> Vec<T> {
        self.bessel.iter().map(|&v| v * self.weight).collect()
    }

    /// Whether x lies off every mirror.
    pub fn is_regular(&self) -> bool {
        self.x.iter().all(|&v| v != T::zero())
    }
}

pub fn strictly_decreasing<T: Real>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// last / first; NaN for fewer than two values or a zero first value.
pub fn envelope_ratio<T: Real>(values: &[T]) -> T {
    match (values.first(), values.last()) {
        (Some(&a), Some(&b)) if values.len() > 1 && a != T::zero() => b / a,
        _ => T::nan(),
    }
}

/// Unit directions used on every shell: ±1 for d = 1, equispaced angles for
/// d = 2, the coordinate axes plus a Fibonacci lattice for d = 3.
fn shell_directions<T: Real>(d: usize, samples: usize) -> Result<Vec<Vec<T>>> {
    let m = samples.max(1);
    match d {
        1 => Ok(vec![vec![T::one()], vec![-T::one()]]),
        2 => {
            let step = T::TAU() / from_usize::<T>(m);
            Ok((0..m)
                .map(|k| {
                    let th = step * from_usize::<T>(k);
                    vec![th.cos(), th.sin()]
                })
                .collect())
        }
        3 => {
            let mut dirs = Vec::with_capacity(m + 6);
            for l in 0..3 {
                for s in [T::one(), -T::one()] {
                    let mut e = vec![T::zero(); 3];
                    e[l] = s;
                    dirs.push(e);
                }
            }
            let golden = T::PI() * (lit::<T>(3.0) - lit::<T>(5.0).sqrt());
            let mf = from_usize::<T>(m);
            for k in 0..m {
                let z = T::one() - (lit::<T>(2.0) * from_usize::<T>(k) + T::one()) / mf;
                let r = (T::one() - z * z).max(T::zero()).sqrt();
                let ph = golden * from_usize::<T>(k);
                dirs.push(vec![r * ph.cos(), r * ph.sin(), z]);
            }
            Ok(dirs)
        }
        _ => Err(DunklError::UnsupportedDimension(d)),
    }
}

/// Maxima of |K(-ix, Rβ)| and |J_W(-ix, Rβ)| over sampled β for each R.
pub fn decay_scan<T: Real>(ctx: &WeightContext<T>, x: &[T], shell_radii: &[T], samples_per_shell: usize) -> Result<DecayScan<T>> {
    let d = ctx.require_product()?.len();
    if x.len() != d {
        return Err(DunklError::contract(format!("expected a {d}-vector")));
    }
    if shell_radii.iter().any(|r| !(r.is_finite() && *r > T::zero())) || !shell_radii.windows(2).all(|w| w[0] < w[1]) {
        return Err(DunklError::contract("shell radii must be positive and strictly increasing"));
    }
    let dirs = shell_directions::<T>(d, samples_per_shell)?;
    let mx: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(T::zero(), -v)).collect();
    let mut kernel = Vec::with_capacity(shell_radii.len());
    let mut bessel = Vec::with_capacity(shell_radii.len());
    for &r in shell_radii {
        let (mut kmax, mut jmax) = (T::zero(), T::zero());
        for b in &dirs {
            let z: Vec<Complex<T>> = b.iter().map(|&v| Complex::new(v * r, T::zero())).collect();
            kmax = kmax.max(dunkl_kernel_product(ctx, &mx, &z)?.norm());
            jmax = jmax.max(generalized_bessel(ctx, x, &z)?.norm());
        }
        kernel.push(kmax);
        bessel.push(jmax);
    }
    Ok(DecayScan {
        x: x.to_vec(),
        radii: shell_radii.to_vec(),
        weight: ctx.weight(x),
        kernel,
        bessel,
    })
}

fn positive_gamma<T: Real>(g: T) -> Result<()> {
    if !(g.is_finite() && g > T::zero()) {
        return Err(DunklError::domain(format!("γ must be positive, got {g:?}")));
    }
    Ok(())
}

/// Both sides of the spherical-mean identity for V_k:
///
/// ```text
/// ∫_S V_k(h)(tξ) ω_k(ξ) dσ(ξ)
///   = Γ(γ+d/2) d_k / (π^{d/2} Γ(γ)) · t^{2-2γ-d} ∫_{B(0,t)} h(y)(t² - ‖y‖²)^{γ-1} dy
/// ```
///
/// Returns (left, right).
pub fn spherical_mean_vk<T: Real>(ctx: &WeightContext<T>, h: &ScalarField<T>, t: T, opts: &QuadOptions) -> Result<(T, T)> {
    ctx.require_product()?;
    let d = ctx.dim();
    if d < 2 {
        return Err(DunklError::UnsupportedDimension(d));
    }
    if !(t.is_finite() && t > T::zero()) {
        return Err(DunklError::domain("t must be positive"));
    }
    let g = ctx.gamma();
    positive_gamma(g)?;
    let outer = QuadOptions {
        order: opts.order.min(16),
        ..*opts
    };
    let lhs = adapt(d, &outer, |n| {
        let rule = ctx.weighted_sphere_rule(n)?;
        let (mut acc, mut abs) = (CompensatedSum::new(), CompensatedSum::new());
        let mut p = vec![T::zero(); d];
        for (xi, w) in rule.iter() {
            for l in 0..d {
                p[l] = t * xi[l];
            }
            let v = vk_estimate(ctx, h, &p, &outer)?.value;
            acc.add(w * v);
            abs.add(w * v.abs());
        }
        Ok((acc.value(), abs.value()))
    })?
    .value;
    let rhs = ball_mean(ctx, h, t, &outer)?;
    Ok((lhs, rhs))
}

/// Right-hand side of the spherical-mean identity: ρ = t√s turns the ball
/// integral into ½ t^{2γ+d-2} ∫₀¹ A(t√s) s^{d/2-1}(1-s)^{γ-1} ds with
/// A(ρ) = ∫_S h(ρξ) dσ.
fn ball_mean<T: Real>(ctx: &WeightContext<T>, h: &ScalarField<T>, t: T, opts: &QuadOptions) -> Result<T> {
    let d = ctx.dim();
    let g = ctx.gamma();
    let half_d = from_usize::<T>(d) * lit(0.5);
    let c = gamma(g + half_d)? * ctx.sphere_mass() / (T::PI().powf(half_d) * gamma(g)?);
    let est = adapt(d, opts, |n| {
        let radial = cached_jacobi(n, g - T::one(), half_d - T::one())?;
        let sphere = sphere_rule::<T>(d, n)?;
        let mut p = vec![T::zero(); d];
        let mut shell = |rho: T| -> (T, T) {
            let (mut a, mut b) = (CompensatedSum::new(), CompensatedSum::new());
            for (xi, w) in sphere.iter() {
                for l in 0..d {
                    p[l] = rho * xi[l];
                }
                let v = h.eval(&p);
                a.add(w * v);
                b.add(w * v.abs());
            }
            (a.value(), b.value())
        };
        let mut mags = Vec::with_capacity(radial.len());
        let val = radial.integrate_interval(T::zero(), T::one(), |s| {
            let (v, a) = shell(t * s.sqrt());
            mags.push(a);
            v
        });
        let mut it = mags.into_iter();
        let abs = radial.integrate_interval(T::zero(), T::one(), |_| it.next().unwrap_or_else(T::zero));
        Ok((val, abs))
    })?;
    Ok(c * lit::<T>(0.5) * est.value)
}

/// Both sides of the rank-one analogue
///
/// ```text
/// (V_k(h)(x) + V_k(h)(-x)) / 2 = Γ(γ+½)/(√π Γ(γ)) x^{1-2γ} ∫_{-x}^{x} h(y)(x² - y²)^{γ-1} dy
/// ```
///
/// Returns (left, right).
pub fn spherical_mean_rank1<T: Real>(gamma_k: T, h: &ScalarField<T>, x: T, opts: &QuadOptions) -> Result<(T, T)> {
    positive_gamma(gamma_k)?;
    if !(x.is_finite() && x > T::zero()) {
        return Err(DunklError::domain("x must be positive"));
    }
    let half = lit::<T>(0.5);
    let lhs = adapt(1, opts, |n| {
        let r = cached_jacobi(n, gamma_k - T::one(), gamma_k)?;
        let p = r.probability_weights();
        let (mut a, mut b) = (CompensatedSum::new(), CompensatedSum::new());
        for (i, &w) in p.iter().enumerate() {
            let v = (h.eval(&[x * r.x(i)]) + h.eval(&[-x * r.x(i)])) * half;
            a.add(w * v);
            b.add(w * v.abs());
        }
        Ok((a.value(), b.value()))
    })?;
    // y = xs: the x-powers cancel and Γ(γ+½)/(√πΓ(γ)) normalizes (1-s²)^{γ-1}
    let rhs = adapt(1, opts, |n| {
        let r = cached_jacobi(n, gamma_k - T::one(), gamma_k - T::one())?;
        let p = r.probability_weights();
        let (mut a, mut b) = (CompensatedSum::new(), CompensatedSum::new());
        for (i, &w) in p.iter().enumerate() {
            let v = h.eval(&[x * r.x(i)]);
            a.add(w * v);
            b.add(w * v.abs());
        }
        Ok((a.value(), b.value()))
    })?;
    Ok((lhs.value, rhs.value))
}

/// Generalized translation τ_x f(y) in rank one.
pub fn translate_rank1<T: Real>(gamma_k: T, f: &ScalarField<T>, x: T, y: T, opts: &QuadOptions) -> Result<T> {
    Ok(translate_rank1_estimate(gamma_k, f, x, y, opts)?.value)
}

pub fn translate_rank1_estimate<T: Real>(gamma_k: T, f: &ScalarField<T>, x: T, y: T, opts: &QuadOptions) -> Result<Estimate<T>> {
    if gamma_k == T::zero() {
        return Ok(Estimate::exact(f.eval(&[x + y])));
    }
    positive_gamma(gamma_k)?;
    if x == T::zero() || y == T::zero() {
        return Ok(Estimate::exact(f.eval(&[x + y])));
    }
    let half = lit::<T>(0.5);
    let (x2y2, xy2, sum) = (x * x + y * y, (x * y) * lit(2.0), x + y);
    adapt(1, opts, |n| {
        let r = cached_jacobi(n, gamma_k - T::one(), gamma_k)?;
        let p = r.probability_weights();
        let (mut a, mut b) = (CompensatedSum::new(), CompensatedSum::new());
        for (i, &w) in p.iter().enumerate() {
            let s = (x2y2 + xy2 * r.x(i)).max(T::zero()).sqrt();
            let q = if s > T::zero() { sum / s } else { T::zero() };
            let v = half * (f.eval(&[s]) * (T::one() + q) + f.eval(&[-s]) * (T::one() - q));
            a.add(w * v);
            b.add(w * v.abs());
        }
        Ok((a.value(), b.value()))
    })
}

/// τ_x f(y) for radial f = F(‖·‖) on ℤ₂^d, integrated against 𝒦(y, η).
///
/// A non-regular y falls back to the density of x; both non-regular is a
/// regular-point error.
pub fn translate_radial<T: Real>(
    ctx: &WeightContext<T>,
    profile: &RadialProfile<T>,
    x: &[T],
    y: &[T],
    opts: &QuadOptions,
) -> Result<T> {
    Ok(translate_radial_estimate(ctx, profile, x, y, opts)?.value)
}

pub fn translate_radial_estimate<T: Real>(
    ctx: &WeightContext<T>,
    profile: &RadialProfile<T>,
    x: &[T],
    y: &[T],
    opts: &QuadOptions,
) -> Result<Estimate<T>> {
    let alphas = ctx.require_product()?;
    let d = alphas.len();
    if x.len() != d || y.len() != d {
        return Err(DunklError::contract(format!("expected {d}-vectors")));
    }
    let regular = |v: &[T]| v.iter().all(|&c| c != T::zero());
    let (center, other) = if regular(y) {
        (y, x)
    } else if regular(x) {
        (x, y)
    } else {
        return Err(DunklError::RegularPoint("τ_x f(y) needs x or y off the mirrors".into()));
    };
    let (nx, ny) = (norm(x), norm(y));
    let base = nx * nx + ny * ny;
    if other.iter().all(|&v| v == T::zero()) {
        return Ok(Estimate::exact(profile.eval(base.sqrt())));
    }
    let cross: Vec<T> = center.iter().zip(other).map(|(&c, &o)| (c * o) * lit(2.0)).collect();
    adapt(d, opts, |n| {
        let (v, a) = product_expectation(alphas, n, |t: &[T]| {
            let mut arg = base;
            for l in 0..d {
                arg += cross[l] * t[l];
            }
            let v = profile.eval(arg.max(T::zero()).sqrt());
            Pair(v, v.abs())
        })
        .map(|p: Pair<T>| (p.0, p.1))?;
        Ok((v, a))
    })
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
