//! Ball-measure ratios for ν_y and μ_x, and the spherical average of 𝒦.
//!
//! ν_y(B) = ∫_B 𝒦°(x, y) dx and ω_k(x) μ_x(B) = ∫_B 𝒦°(x, y) dy. Both
//! integrands factor over coordinates, so a ball is integrated as nested
//! chords with tanh–sinh panels split at every point where a factor is
//! singular or where an inner chord endpoint crosses such a point.

use serde::Serialize;

use crate::error::{DunklError, Result};
use crate::intertwine::Estimate;
use crate::kernel::{density_constant, KernelDensity};
use crate::rootsys::WeightContext;
use crate::scalar::{from_usize, lit, norm, to_f64, Real};
use crate::specfun::{gamma, TanhSinh};

/// Radii 1/p used by the ratio series.
pub const RADIUS_SCHEDULE: [usize; 5] = [16, 32, 64, 128, 256];

/// Lebesgue volume of a Euclidean ball of radius r in ℝ^d.
pub fn ball_volume<T: Real>(d: usize, r: T) -> T {
    let half_d = from_usize::<T>(d) * lit(0.5);
    T::PI().powf(half_d) * r.powi(d as i32) / gamma(half_d + T::one()).expect("positive argument")
}

#[derive(Debug, Clone, Serialize)]
pub struct BallRatioSeries<T> {
    pub center: Vec<T>,
    /// Strictly decreasing.
    pub radii: Vec<T>,
    pub ratios: Vec<T>,
    /// sup of the ratios at this radius and every smaller one; nonincreasing.
    pub sup_ratios: Vec<T>,
    /// Ratio at the finest radius.
    pub limit_estimate: T,
}

impl<T: Real> BallRatioSeries<T> {
    fn from_ratios(center: Vec<T>, radii: Vec<T>, ratios: Vec<T>) -> Self {
        let mut sup_ratios = ratios.clone();
        for i in (0..sup_ratios.len().saturating_sub(1)).rev() {
            sup_ratios[i] = sup_ratios[i].max(sup_ratios[i + 1]);
        }
        let limit_estimate = *ratios.last().unwrap_or(&T::zero());
        Self {
            center,
            radii,
            ratios,
            sup_ratios,
            limit_estimate,
        }
    }
}

/// Factor evaluated at base + offset (see `TanhSinh::integrate_offsets`).
type Factor<'a, T> = Box<dyn Fn(T, T) -> T + 'a>;

struct BallIntegrator<'a, T> {
    center: &'a [T],
    factors: Vec<Factor<'a, T>>,
    breaks: Vec<Vec<T>>,
    ts: TanhSinh<T>,
}

impl<T: Real> BallIntegrator<'_, T> {
    fn integrate(&self, r: T) -> T {
        self.level(0, r * r)
    }

    fn level(&self, l: usize, rem: T) -> T {
        if !(rem > T::zero()) {
            return T::zero();
        }
        let h = rem.sqrt();
        let (lo, hi) = (self.center[l] - h, self.center[l] + h);
        let mut cuts: Vec<T> = vec![lo, hi];
        cuts.extend(self.breaks[l].iter().copied().filter(|&b| b > lo && b < hi));
        if l + 1 < self.center.len() {
            let c = self.center[l + 1];
            for &b in &self.breaks[l + 1] {
                let s = rem - (b - c) * (b - c);
                if s > T::zero() {
                    let q = s.sqrt();
                    for p in [self.center[l] - q, self.center[l] + q] {
                        if p > lo && p < hi {
                            cuts.push(p);
                        }
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut"));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (T::one() + a.abs()));
        let mut acc = T::zero();
        for w in cuts.windows(2) {
            acc += self.ts.integrate_offsets(w[0], w[1], |base, off| {
                let v = base + off;
                let f = (self.factors[l])(base, off);
                if f == T::zero() {
                    return T::zero();
                }
                if l + 1 == self.center.len() {
                    f
                } else {
                    let dv = v - self.center[l];
                    f * self.level(l + 1, rem - dv * dv)
                }
            });
        }
        acc
    }
}

fn tanh_sinh_level(d: usize) -> u32 {
    match d {
        1 => 7,
        2 => 6,
        _ => 5,
    }
}

fn check_dims(d: usize, a: usize, b: usize) -> Result<()> {
    if a != d || b != d {
        return Err(DunklError::contract(format!("expected {d}-vectors")));
    }
    Ok(())
}

/// ν_y(B(center, r)) = ∫_B 𝒦°(x, y) dx.
pub fn ball_measure_nu<T: Real>(ctx: &WeightContext<T>, y: &[T], center: &[T], r: T) -> Result<T> {
    let kd = KernelDensity::new(ctx)?;
    let d = kd.dim();
    check_dims(d, y.len(), center.len())?;
    if !(r > T::zero()) {
        return Err(DunklError::domain("ball radius must be positive"));
    }
    let mut factors: Vec<Factor<'_, T>> = Vec::with_capacity(d);
    let mut breaks = Vec::with_capacity(d);
    for l in 0..d {
        let (a, yl) = (kd.alphas()[l], y[l]);
        let c = density_constant(a)?;
        factors.push(Box::new(move |b: T, o: T| nu_factor(c, a, b, o, yl)));
        breaks.push(vec![-yl.abs(), T::zero(), yl.abs()]);
    }
    let bi = BallIntegrator {
        center,
        factors,
        breaks,
        ts: TanhSinh::new(tanh_sinh_level(d)),
    };
    Ok(kd.weight_factor() * bi.integrate(r))
}

/// ω_k(x) μ_x(B(center, r)) = ∫_B 𝒦°(x, y) dy.
pub fn ball_measure_mu<T: Real>(ctx: &WeightContext<T>, x: &[T], center: &[T], r: T) -> Result<T> {
    let kd = KernelDensity::new(ctx)?;
    let d = kd.dim();
    check_dims(d, x.len(), center.len())?;
    if !(r > T::zero()) {
        return Err(DunklError::domain("ball radius must be positive"));
    }
    let mut factors: Vec<Factor<'_, T>> = Vec::with_capacity(d);
    let mut breaks = Vec::with_capacity(d);
    for l in 0..d {
        let (a, xl) = (kd.alphas()[l], x[l]);
        let c = density_constant(a)?;
        factors.push(Box::new(move |b: T, o: T| mu_factor(c, a, xl, b, o)));
        breaks.push(vec![-xl.abs(), xl.abs()]);
    }
    let bi = BallIntegrator {
        center,
        factors,
        breaks,
        ts: TanhSinh::new(tanh_sinh_level(d)),
    };
    Ok(kd.weight_factor() * bi.integrate(r))
}

/// 𝒦°(x, y) at rank one as a function of x = b + o.
#[inline]
fn nu_factor<T: Real>(c: T, a: T, b: T, o: T, y: T) -> T {
    let x = b + o;
    if !(y.abs() < x.abs()) {
        return T::zero();
    }
    // |x| - s y and |x| + s y, differenced before adding the offset
    let (p, q) = if x > T::zero() {
        ((b - y) + o, (b + y) + o)
    } else {
        ((y - b) - o, (-b - y) - o)
    };
    if !(p > T::zero() && q > T::zero()) {
        return T::zero();
    }
    c * p.powf(a - T::one()) * q.powf(a)
}

/// 𝒦°(x, y) at rank one as a function of y = b + o.
#[inline]
fn mu_factor<T: Real>(c: T, a: T, x: T, b: T, o: T) -> T {
    let ax = x.abs();
    let s = if x > T::zero() { T::one() } else { -T::one() };
    let p = (ax - s * b) - s * o;
    let q = (ax + s * b) + s * o;
    if !(p > T::zero() && q > T::zero()) {
        return T::zero();
    }
    c * p.powf(a - T::one()) * q.powf(a)
}

fn series<T: Real, F: FnMut(T) -> Result<T>>(
    d: usize,
    center: &[T],
    schedule: &[usize],
    mut measure: F,
) -> Result<BallRatioSeries<T>> {
    let mut ps = schedule.to_vec();
    ps.sort_unstable();
    ps.dedup();
    if ps.is_empty() || ps[0] == 0 {
        return Err(DunklError::domain("radius schedule must contain positive integers"));
    }
    let radii: Vec<T> = ps.iter().map(|&p| T::one() / from_usize::<T>(p)).collect();
    let ratios = radii
        .iter()
        .map(|&r| Ok(measure(r)? / ball_volume(d, r)))
        .collect::<Result<Vec<T>>>()?;
    Ok(BallRatioSeries::from_ratios(center.to_vec(), radii, ratios))
}

/// ν_y(B(center, 1/p)) / m(B(center, 1/p)) over the schedule; tends to 𝒦°(center, y).
pub fn ratio_series_nu<T: Real>(ctx: &WeightContext<T>, y: &[T], center: &[T], schedule: &[usize]) -> Result<BallRatioSeries<T>> {
    series(ctx.dim(), center, schedule, |r| ball_measure_nu(ctx, y, center, r))
}

/// ω_k(x) μ_x(B(center, 1/p)) / m(B(center, 1/p)); tends to 𝒦°(x, center).
pub fn ratio_series_mu<T: Real>(ctx: &WeightContext<T>, x: &[T], center: &[T], schedule: &[usize]) -> Result<BallRatioSeries<T>> {
    if x.iter().any(|&v| v == T::zero()) {
        return Err(DunklError::RegularPoint("μ_x ratio series needs regular x".into()));
    }
    series(ctx.dim(), center, schedule, |r| ball_measure_mu(ctx, x, center, r))
}

/// Both sides of the spherical average identity for 𝒦.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SphericalDensityAverage<T> {
    /// ∫_{S^{d-1}} 𝒦(tβ, y) ω_k(β) dσ(β).
    pub integral: T,
    /// The integral divided by d_k.
    pub normalized_integral: T,
    /// C t^{2-2γ-d} (t² - ‖y‖²)^{γ-1} for t > ‖y‖, else 0, with
    /// C = Γ(γ+d/2) d_k / (π^{d/2} Γ(γ)).
    pub rhs: T,
    /// rhs / normalized_integral; equals d_k when the integral itself
    /// matches the right-hand side.
    pub offset: T,
}

/// Evaluates both sides for d ∈ {2, 3}.
pub fn spherical_density_average<T: Real>(ctx: &WeightContext<T>, t: T, y: &[T]) -> Result<SphericalDensityAverage<T>> {
    let kd = KernelDensity::new(ctx)?;
    let d = kd.dim();
    if !(2..=3).contains(&d) {
        return Err(DunklError::UnsupportedDimension(d));
    }
    check_dims(d, y.len(), y.len())?;
    if !(t > T::zero()) {
        return Err(DunklError::domain("radius t must be positive"));
    }
    let ny = norm(y);
    if (t - ny).abs() <= lit::<T>(1e-12) * (T::one() + t) {
        return Err(DunklError::SingularPoint(format!("t = ‖y‖ = {}", to_f64(ny))));
    }
    let g = ctx.gamma();
    let dk = ctx.sphere_mass();
    let half_d = from_usize::<T>(d) * lit(0.5);
    let rhs = if t > ny {
        gamma(g + half_d)? * dk / (T::PI().powf(half_d) * gamma(g)?)
            * t.powf(lit::<T>(2.0) - g - g - from_usize::<T>(d))
            * (t * t - ny * ny).powf(g - T::one())
    } else {
        T::zero()
    };
    // 𝒦(tβ, y) ω_k(β) = t^{-2γ} 𝒦°(tβ, y)
    let scale = t.powf(-(g + g));
    let integral = if t > ny {
        scale * sphere_integral(&kd, t, y)?
    } else {
        T::zero()
    };
    let normalized_integral = integral / dk;
    let offset = if normalized_integral != T::zero() {
        rhs / normalized_integral
    } else {
        T::nan()
    };
    Ok(SphericalDensityAverage {
        integral,
        normalized_integral,
        rhs,
        offset,
    })
}

/// Angles in [lo, hi] where cos or sin reach ±v/t (v ≥ 0).
fn angle_breaks<T: Real>(v: T, t: T, out: &mut Vec<T>) {
    let q = v / t;
    if q < T::one() {
        let a = q.acos();
        let b = q.asin();
        let pi = T::PI();
        for th in [a, pi - a, pi + a, T::TAU() - a, b, pi - b, pi + b, T::TAU() - b] {
            out.push(th);
        }
    }
}

fn sorted_cuts<T: Real>(mut cuts: Vec<T>, lo: T, hi: T) -> Vec<T> {
    cuts.retain(|&c| c > lo && c < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut"));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * lit(8.0));
    cuts
}

fn sphere_integral<T: Real>(kd: &KernelDensity<T>, t: T, y: &[T]) -> Result<T> {
    let d = kd.dim();
    let pi = T::PI();
    if d == 2 {
        let ts = TanhSinh::new(7);
        let mut br = Vec::new();
        for l in 0..2 {
            angle_breaks(y[l].abs(), t, &mut br);
        }
        for k in 0..4 {
            br.push(pi * lit(0.5) * from_usize::<T>(k));
        }
        let cuts = sorted_cuts(br, T::zero(), T::TAU());
        let mut acc = T::zero();
        for w in cuts.windows(2) {
            acc += ts.integrate(w[0], w[1], |th| {
                let x = [t * th.cos(), t * th.sin()];
                kd.weighted_unchecked(&x, y)
            });
        }
        return Ok(acc);
    }
    // d = 3: β = (sin θ cos φ, sin θ sin φ, cos θ)
    let ts = TanhSinh::new(6);
    let mut br_theta = Vec::new();
    angle_breaks(y[2].abs(), t, &mut br_theta);
    for v in [y[0].abs(), y[1].abs()] {
        angle_breaks(v, t, &mut br_theta);
    }
    br_theta.push(pi * lit(0.5));
    let cuts_t = sorted_cuts(br_theta, T::zero(), pi);
    let mut acc = T::zero();
    for w in cuts_t.windows(2) {
        acc += ts.integrate(w[0], w[1], |th| {
            let (s, c) = th.sin_cos();
            let rho = t * s;
            if rho <= T::zero() {
                return T::zero();
            }
            let mut br = Vec::new();
            for l in 0..2 {
                angle_breaks(y[l].abs(), rho, &mut br);
            }
            for k in 0..4 {
                br.push(pi * lit(0.5) * from_usize::<T>(k));
            }
            let cuts_p = sorted_cuts(br, T::zero(), T::TAU());
            let mut inner = T::zero();
            for v in cuts_p.windows(2) {
                inner += ts.integrate(v[0], v[1], |ph| {
                    let x = [rho * ph.cos(), rho * ph.sin(), t * c];
                    kd.weighted_unchecked(&x, y)
                });
            }
            inner * s
        });
    }
    Ok(acc)
}

/// Relative error of the limit estimate against a target, with the series.
pub fn limit_error<T: Real>(series: &BallRatioSeries<T>, target: T) -> Estimate<T> {
    Estimate {
        value: series.limit_estimate,
        error: (series.limit_estimate - target).abs() / target.abs().max(T::min_positive_value()),
        order: series.radii.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::weighted_density_rank1;

    fn close(a: f64, b: f64, rtol: f64) {
        assert!((a - b).abs() <= rtol * b.abs().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn nu_ball_examples() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        let v = ball_measure_nu(&ctx, &[0.5], &[1.0], 0.01).unwrap();
        close(v, 0.015, 1e-4);
        assert_eq!(ball_measure_nu(&ctx, &[0.5], &[0.0], 0.3).unwrap(), 0.0);
        close(ball_measure_nu(&ctx, &[0.0], &[0.0], 1.0).unwrap(), 0.5, 1e-12);
    }

    #[test]
    fn nu_ball_against_closed_form_antiderivative() {
        // 𝒦°(x, y) for γ = 1: (x + y)/2 on |x| > |y| with x > 0
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        let v = ball_measure_nu(&ctx, &[0.5], &[0.6], 0.3).unwrap();
        // ∫_{0.5}^{0.9} (x + 0.5)/2 dx
        let want = ((0.9f64 + 0.5).powi(2) - 1.0) / 4.0;
        close(v, want, 1e-12);
    }

    #[test]
    fn ratio_series_rank_one() {
        let ctx = WeightContext::<f64>::rank_one(1.0).unwrap();
        let s = ratio_series_nu(&ctx, &[0.5], &[1.0], &RADIUS_SCHEDULE).unwrap();
        close(s.limit_estimate, 0.75, 0.02);
        for w in s.sup_ratios.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for w in s.radii.windows(2) {
            assert!(w[0] > w[1]);
        }
        let m = ratio_series_mu(&ctx, &[1.0], &[0.5], &RADIUS_SCHEDULE).unwrap();
        close(m.limit_estimate, 0.75, 0.02);
        let out = ratio_series_mu(&ctx, &[1.0], &[1.5], &RADIUS_SCHEDULE).unwrap();
        assert!(out.ratios.iter().all(|&v| v == 0.0));
        let inside = ratio_series_nu(&ctx, &[0.8], &[0.2], &RADIUS_SCHEDULE).unwrap();
        assert!(inside.ratios.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ratio_series_two_dims() {
        let ctx = WeightContext::<f64>::z2(&[1.0, 1.0]).unwrap();
        let kd = KernelDensity::new(&ctx).unwrap();
        let s = ratio_series_nu(&ctx, &[0.3, 0.3], &[1.0, 1.0], &RADIUS_SCHEDULE).unwrap();
        let want = kd.weighted(&[1.0, 1.0], &[0.3, 0.3]).unwrap();
        close(s.limit_estimate, want, 0.02);
        let ctx = WeightContext::<f64>::z2(&[1.0, 1.5]).unwrap();
        let kd = KernelDensity::new(&ctx).unwrap();
        let m = ratio_series_mu(&ctx, &[1.0, 2.0], &[0.5, 0.5], &RADIUS_SCHEDULE).unwrap();
        close(m.limit_estimate, kd.weighted(&[1.0, 2.0], &[0.5, 0.5]).unwrap(), 0.02);
    }

    #[test]
    fn ball_measure_singular_factor() {
        // γ = 0.3: the density blows up at y = x; compare with the antiderivative
        let g = 0.3;
        let ctx = WeightContext::<f64>::rank_one(g).unwrap();
        let c = density_constant(g).unwrap();
        // μ route, x = 1, ball (0.9, 1.1) ∩ (-1, 1) = (0.9, 1): ∫ c (1-y)^{g-1}(1+y)^g dy
        let v = ball_measure_mu(&ctx, &[1.0], &[1.0], 0.1).unwrap();
        let rule = crate::specfun::gauss_jacobi_rule(30, g - 1.0, 0.0).unwrap();
        let want = c * rule.integrate_interval(0.9, 1.0, |y: f64| (1.0 + y).powf(g));
        close(v, want, 1e-9);
        let probe = weighted_density_rank1(g, 1.0, 0.95).unwrap();
        close(probe, c * 0.05f64.powf(g - 1.0) * 1.95f64.powf(g), 1e-14);
    }

    #[test]
    fn spherical_average_examples() {
        let ctx = WeightContext::<f64>::z2(&[1.0, 1.0]).unwrap();
        let z = spherical_density_average(&ctx, 0.5, &[1.0, 0.0]).unwrap();
        assert_eq!((z.integral, z.rhs), (0.0, 0.0));
        let s = spherical_density_average(&ctx, 2.0, &[1.0, 0.0]).unwrap();
        close(s.integral, s.rhs, 1e-8);
        close(s.offset, ctx.sphere_mass(), 1e-8);
        let ctx3 = WeightContext::<f64>::z2(&[1.5, 1.5]).unwrap();
        let s = spherical_density_average(&ctx3, 1.0, &[0.0, 0.0]).unwrap();
        close(s.integral, s.rhs, 1e-8);
        assert!(matches!(
            spherical_density_average(&ctx, 1.0, &[1.0, 0.0]),
            Err(DunklError::SingularPoint(_))
        ));
    }

    #[test]
    fn spherical_average_three_dims() {
        let ctx = WeightContext::<f64>::z2(&[1.2, 0.8, 1.5]).unwrap();
        let s = spherical_density_average(&ctx, 1.7, &[0.3, -0.5, 0.4]).unwrap();
        close(s.integral, s.rhs, 1e-5);
    }

    #[test]
    fn volumes() {
        close(ball_volume(1, 0.5), 1.0, 1e-15);
        close(ball_volume(2, 1.0), std::f64::consts::PI, 1e-14);
        close(ball_volume(3, 2.0), 4.0 / 3.0 * std::f64::consts::PI * 8.0, 1e-14);
    }
}
