//! Scalar fields on ℝ^d and radial profiles, plus the small catalog of test
//! functions the CLI exposes.

use std::fmt;
use std::sync::Arc;

use crate::error::{DunklError, Result};
use crate::scalar::{lit, norm, Real};

type EvalFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;
type ProfileFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    C1,
    Smooth,
}

/// Function F on [0, ∞) describing a radial field x ↦ F(‖x‖).
#[derive(Clone)]
pub struct RadialProfile<T> {
    f: ProfileFn<T>,
    support_radius: Option<T>,
    label: String,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(label: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            support_radius: None,
            label: label.into(),
        }
    }

    /// Declare compact support in [0, r]; evaluation returns 0 beyond `r`.
    pub fn with_support(mut self, r: T) -> Self {
        let inner = self.f.clone();
        self.f = Arc::new(move |t: T| if t.abs() <= r { inner(t) } else { T::zero() });
        self.support_radius = Some(r);
        self
    }

    #[inline]
    pub fn eval(&self, r: T) -> T {
        (self.f)(r)
    }

    pub fn support_radius(&self) -> Option<T> {
        self.support_radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<T> fmt::Debug for RadialProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile").field("label", &self.label).finish()
    }
}

/// A real-valued field with optional analytic gradient and metadata.
#[derive(Clone)]
pub struct ScalarField<T> {
    eval: EvalFn<T>,
    gradient: Option<GradFn<T>>,
    profile: Option<RadialProfile<T>>,
    support_radius: Option<T>,
    smoothness: Smoothness,
    label: String,
}

impl<T> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("radial", &self.profile.is_some())
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl<T: Real> ScalarField<T> {
    pub fn new(label: impl Into<String>, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            gradient: None,
            profile: None,
            support_radius: None,
            smoothness: Smoothness::Smooth,
            label: label.into(),
        }
    }

    /// Radial field x ↦ F(‖x‖); inherits the profile's support.
    pub fn radial(profile: RadialProfile<T>) -> Self {
        let p = profile.clone();
        Self {
            eval: Arc::new(move |x: &[T]| p.eval(norm(x))),
            gradient: None,
            support_radius: profile.support_radius(),
            label: profile.label().to_string(),
            profile: Some(profile),
            smoothness: Smoothness::Smooth,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[T], &mut [T]) + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    /// Declare compact support in the closed ball of radius `r`; the field is
    /// cut off to zero outside it.
    pub fn with_support(mut self, r: T) -> Self {
        let inner = self.eval.clone();
        self.eval = Arc::new(move |x: &[T]| if norm(x) <= r { inner(x) } else { T::zero() });
        if let Some(g) = self.gradient.take() {
            self.gradient = Some(Arc::new(move |x: &[T], out: &mut [T]| {
                if norm(x) <= r {
                    g(x, out)
                } else {
                    out.iter_mut().for_each(|v| *v = T::zero());
                }
            }));
        }
        if let Some(p) = self.profile.take() {
            self.profile = Some(p.with_support(r));
        }
        self.support_radius = Some(r);
        self
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        (self.eval)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Analytic gradient if present, else `None`.
    pub fn analytic_gradient(&self, x: &[T]) -> Option<Vec<T>> {
        self.gradient.as_ref().map(|g| {
            let mut out = vec![T::zero(); x.len()];
            g(x, &mut out);
            out
        })
    }

    /// Gradient: analytic when available, else central differences with
    /// step ε^{1/3}(1+‖x‖).
    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        if let Some(g) = self.analytic_gradient(x) {
            return g;
        }
        let h = T::epsilon().cbrt() * (T::one() + norm(x));
        let mut p = x.to_vec();
        (0..x.len())
            .map(|j| {
                let orig = p[j];
                p[j] = orig + h;
                let fp = self.eval(&p);
                p[j] = orig - h;
                let fm = self.eval(&p);
                p[j] = orig;
                (fp - fm) / (h + h)
            })
            .collect()
    }

    pub fn is_radial(&self) -> bool {
        self.profile.is_some()
    }

    pub fn profile(&self) -> Option<&RadialProfile<T>> {
        self.profile.as_ref()
    }

    pub fn support_radius(&self) -> Option<T> {
        self.support_radius
    }

    pub fn require_support(&self) -> Result<T> {
        self.support_radius
            .ok_or_else(|| DunklError::contract(format!("field '{}' has no declared support radius", self.label)))
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// x ↦ f(r x).
    pub fn dilate(&self, r: T) -> Self {
        let inner = self.eval.clone();
        let mut out = ScalarField::new(format!("{}(r·)", self.label), move |x: &[T]| {
            let y: Vec<T> = x.iter().map(|&v| v * r).collect();
            inner(&y)
        });
        if let Some(p) = &self.profile {
            let p = p.clone();
            out.profile = Some(RadialProfile::new(format!("{}(r·)", p.label()), move |t| p.eval(t * r)));
        }
        out.support_radius = self.support_radius.map(|s| s / r);
        out.smoothness = self.smoothness;
        out
    }
}

/// Catalog of named test functions.
pub mod catalog {
    use super::*;

    /// e^{-a‖x‖²}, with analytic gradient.
    pub fn gaussian<T: Real>(a: T) -> ScalarField<T> {
        ScalarField::radial(gaussian_profile(a)).with_gradient(move |x: &[T], out: &mut [T]| {
            let e = (-a * crate::scalar::dot(x, x)).exp();
            for (o, &v) in out.iter_mut().zip(x) {
                *o = -(a + a) * v * e;
            }
        })
    }

    pub fn gaussian_profile<T: Real>(a: T) -> RadialProfile<T> {
        RadialProfile::new(format!("gaussian({a})"), move |t: T| (-a * t * t).exp())
    }

    /// Radius beyond which e^{-a r²} < 1e-20 (negligible in every check).
    pub fn gaussian_cutoff<T: Real>(a: T) -> T {
        (lit::<T>(46.1) / a).sqrt()
    }

    /// Smooth bump exp(1 - 1/(1 - ‖x‖²/R²)) supported in the ball of radius R.
    pub fn bump<T: Real>(radius: T) -> ScalarField<T> {
        let r2 = radius * radius;
        ScalarField::radial(bump_profile(radius))
            .with_gradient(move |x: &[T], out: &mut [T]| {
                let s = crate::scalar::dot(x, x) / r2;
                if s >= T::one() {
                    out.iter_mut().for_each(|v| *v = T::zero());
                    return;
                }
                let u = T::one() - s;
                let val = (T::one() - T::one() / u).exp();
                let ds = -val / (u * u); // d/ds
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = ds * (v + v) / r2;
                }
            })
            .with_support(radius)
    }

    pub fn bump_profile<T: Real>(radius: T) -> RadialProfile<T> {
        RadialProfile::new(format!("bump({radius})"), move |t: T| {
            let s = (t / radius).powi(2);
            if s >= T::one() {
                T::zero()
            } else {
                (T::one() - T::one() / (T::one() - s)).exp()
            }
        })
        .with_support(radius)
    }

    /// ∏ x_j^{p_j}.
    pub fn monomial<T: Real>(powers: Vec<u32>) -> ScalarField<T> {
        let p2 = powers.clone();
        ScalarField::new(format!("monomial({powers:?})"), move |x: &[T]| {
            x.iter().zip(&powers).fold(T::one(), |acc, (&v, &p)| acc * v.powi(p as i32))
        })
        .with_gradient(move |x: &[T], out: &mut [T]| {
            for j in 0..out.len() {
                out[j] = x.iter().zip(&p2).enumerate().fold(T::one(), |acc, (i, (&v, &p))| {
                    if i == j {
                        if p == 0 {
                            T::zero()
                        } else {
                            acc * lit::<T>(p as f64) * v.powi(p as i32 - 1)
                        }
                    } else {
                        acc * v.powi(p as i32)
                    }
                });
            }
        })
    }

    /// cos(⟨ξ, x⟩).
    pub fn cosine<T: Real>(freq: Vec<T>) -> ScalarField<T> {
        let f2 = freq.clone();
        ScalarField::new("cosine", move |x: &[T]| crate::scalar::dot(&freq, x).cos()).with_gradient(
            move |x: &[T], out: &mut [T]| {
                let s = -crate::scalar::dot(&f2, x).sin();
                for (o, &w) in out.iter_mut().zip(&f2) {
                    *o = s * w;
                }
            },
        )
    }

    /// First coordinate x ↦ x_1.
    pub fn identity<T: Real>() -> ScalarField<T> {
        ScalarField::new("id", |x: &[T]| x[0]).with_gradient(|_x: &[T], out: &mut [T]| {
            out.iter_mut().for_each(|v| *v = T::zero());
            out[0] = T::one();
        })
    }

    pub fn constant<T: Real>(c: T) -> ScalarField<T> {
        ScalarField::radial(RadialProfile::new(format!("const({c})"), move |_t: T| c))
            .with_gradient(|_x: &[T], out: &mut [T]| out.iter_mut().for_each(|v| *v = T::zero()))
    }

    /// x ↦ e^{⟨x, z⟩} for real z.
    pub fn exponential<T: Real>(z: Vec<T>) -> ScalarField<T> {
        let z2 = z.clone();
        ScalarField::new("exp", move |x: &[T]| crate::scalar::dot(x, &z).exp()).with_gradient(move |x: &[T], out: &mut [T]| {
            let e = crate::scalar::dot(x, &z2).exp();
            for (o, &w) in out.iter_mut().zip(&z2) {
                *o = w * e;
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    fn fd_check(f: &ScalarField<f64>, x: &[f64]) {
        let analytic = f.analytic_gradient(x).unwrap();
        let h = 1e-5;
        for j in 0..x.len() {
            let mut p = x.to_vec();
            p[j] += h;
            let fp = f.eval(&p);
            p[j] -= 2.0 * h;
            let fm = f.eval(&p);
            let fd = (fp - fm) / (2.0 * h);
            let scale = analytic[j].abs().max(1e-3);
            assert!(
                (fd - analytic[j]).abs() <= 1e-4 * scale,
                "{}: {fd} vs {}",
                f.label(),
                analytic[j]
            );
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let x = [0.4, -0.7];
        fd_check(&gaussian(1.3), &x);
        fd_check(&bump(2.0), &x);
        fd_check(&monomial(vec![2, 3]), &x);
        fd_check(&cosine(vec![0.8, -1.1]), &x);
        fd_check(&exponential(vec![0.3, 0.5]), &x);
        fd_check(&identity(), &x);
    }

    #[test]
    fn radial_fields_are_rotation_invariant() {
        let g = bump(2.5);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let x = [0.9, 1.1];
        let rx = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
        assert!((g.eval(&x) - g.eval(&rx)).abs() < 1e-14);
        assert!((g.eval(&x) - g.eval(&[-x[0], x[1]])).abs() < 1e-15);
    }

    #[test]
    fn support_cutoff_and_contract() {
        let g = gaussian(1.0).with_support(2.0);
        assert_eq!(g.eval(&[2.5, 0.0]), 0.0);
        assert!(g.eval(&[1.0, 0.0]) > 0.0);
        assert_eq!(g.require_support().unwrap(), 2.0);
        assert!(gaussian::<f64>(1.0).require_support().is_err());
        assert_eq!(g.profile().unwrap().eval(3.0), 0.0);
    }

    #[test]
    fn finite_difference_gradient_fallback() {
        let f = ScalarField::new("sin", |x: &[f64]| x[0].sin() * x[1]);
        let g = f.gradient(&[0.5, 2.0]);
        assert!((g[0] - 2.0 * 0.5f64.cos()).abs() < 1e-9);
        assert!((g[1] - 0.5f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn dilation() {
        let f = bump(2.0f64).dilate(2.0);
        assert_eq!(f.support_radius(), Some(1.0));
        assert!((f.eval(&[0.25, 0.0]) - bump(2.0).eval(&[0.5, 0.0])).abs() < 1e-15);
        assert!((f.profile().unwrap().eval(0.25) - f.eval(&[0.0, 0.25])).abs() < 1e-15);
    }
}
