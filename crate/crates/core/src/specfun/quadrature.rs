//! Quadrature rules: Gauss–Jacobi, sphere rules and tanh–sinh panels.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{DunklError, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::specfun::gamma::{gamma_unchecked, ln_gamma_unchecked};

/// Order/tolerance knobs shared by the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Starting order per one-dimensional factor.
    pub order: usize,
    /// Largest order tried before giving up.
    pub max_order: usize,
    /// Relative tolerance between successive refinements.
    pub rtol: f64,
    /// Truncation radius for fields without declared support.
    pub truncation: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            order: 64,
            max_order: 512,
            rtol: 1e-9,
            truncation: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// (-1, 1) with weight (1-t)^a (1+t)^b.
    JacobiInterval {
        a: f64,
        b: f64,
    },
    /// Unit sphere S^{d-1} with the standard surface measure.
    Sphere {
        d: usize,
    },
    /// [0, ∞) radial coordinate.
    RadialHalfline,
    Product,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    dim: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    domain: Domain,
}

impl<T: Real> QuadratureRule<T> {
    pub fn new(dim: usize, nodes: Vec<T>, weights: Vec<T>, domain: Domain) -> Result<Self> {
        if dim == 0 || nodes.len() != dim * weights.len() {
            return Err(DunklError::contract("node/weight layout mismatch"));
        }
        if weights.iter().any(|w| !(*w > T::zero())) {
            return Err(DunklError::contract("quadrature weights must be positive"));
        }
        Ok(Self {
            dim,
            nodes,
            weights,
            domain,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn node(&self, i: usize) -> &[T] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Scalar node of a one-dimensional rule.
    pub fn x(&self, i: usize) -> T {
        self.nodes[i * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.nodes.chunks(self.dim).zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(&[T]) -> T>(&self, mut f: F) -> T {
        self.iter().fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, &w| acc + w)
    }

    /// ∫_lo^hi (hi-x)^a (x-lo)^b g(x) dx for a Jacobi rule with exponents (a, b).
    pub fn integrate_interval<F: FnMut(T) -> T>(&self, lo: T, hi: T, mut g: F) -> T {
        let (a, b) = match self.domain {
            Domain::JacobiInterval { a, b } => (a, b),
            _ => (0.0, 0.0),
        };
        let half = (hi - lo) * lit(0.5);
        let mid = (hi + lo) * lit(0.5);
        let scale = half.powf(lit::<T>(1.0 + a + b));
        let mut acc = T::zero();
        for i in 0..self.len() {
            acc += self.weights[i] * g(mid + half * self.x(i));
        }
        acc * scale
    }

    /// Weights rescaled to a probability vector whose sequential sum is exactly one.
    pub fn probability_weights(&self) -> Vec<T> {
        let total = self.total_mass();
        let mut p: Vec<T> = self.weights.iter().map(|&w| w / total).collect();
        let n = p.len();
        let prefix = p[..n.saturating_sub(1)].iter().fold(T::zero(), |acc, &v| acc + v);
        if n > 1 && prefix >= lit(0.5) && prefix <= T::one() {
            // 1 - prefix is exact here, and so is prefix + (1 - prefix)
            p[n - 1] = T::one() - prefix;
            return p;
        }
        let imax = p
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > p[best] { i } else { best });
        for _ in 0..8 {
            let s = p.iter().fold(T::zero(), |acc, &v| acc + v);
            if s == T::one() {
                break;
            }
            p[imax] += T::one() - s;
        }
        p
    }
}

/// Three-term recurrence coefficients of the monic Jacobi polynomials.
fn jacobi_recurrence<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let two = lit::<T>(2.0);
    let ab = a + b;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for i in 0..n {
        let k = from_usize::<T>(i);
        let d = if i == 0 {
            (b - a) / (ab + two)
        } else {
            let s = two * k + ab;
            (b * b - a * a) / (s * (s + two))
        };
        diag.push(d);
    }
    for i in 1..n {
        let k = from_usize::<T>(i);
        let s = two * k + ab;
        let beta = if i == 1 {
            lit::<T>(4.0) * (T::one() + a) * (T::one() + b) / ((ab + two).powi(2) * (ab + lit(3.0)))
        } else {
            lit::<T>(4.0) * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + T::one()) * (s - T::one()))
        };
        off.push(beta.sqrt());
    }
    (diag, off)
}

/// Implicit QL on a symmetric tridiagonal matrix, tracking the first row of
/// the eigenvector matrix. Returns (eigenvalues, first components).
fn tridiagonal_eigen<T: Real>(mut d: Vec<T>, off: Vec<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = d.len();
    let mut e = vec![T::zero(); n];
    e[..n.saturating_sub(1)].copy_from_slice(&off);
    let mut z = vec![T::zero(); n];
    z[0] = T::one();
    let two = lit::<T>(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(DunklError::Accuracy {
                    estimate: f64::NAN,
                    error: f64::NAN,
                    requested: 0.0,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let sign_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok((d, z))
}

/// Jacobi polynomial P_n^{(a,b)}(x) and P_{n-1}^{(a,b)}(x), standard normalization.
fn jacobi_pair<T: Real>(n: usize, a: T, b: T, x: T) -> (T, T) {
    let two = lit::<T>(2.0);
    let mut p_prev = T::one();
    let mut p = ((a + b + two) * x + a - b) / two;
    if n == 0 {
        return (p_prev, T::zero());
    }
    for k in 2..=n {
        let kk = from_usize::<T>(k);
        let s = two * kk + a + b;
        let c1 = two * kk * (kk + a + b) * (s - two);
        let c2 = (s - T::one()) * (s * (s - two) * x + a * a - b * b);
        let c3 = two * (kk + a - T::one()) * (kk + b - T::one()) * s;
        let next = (c2 * p - c3 * p_prev) / c1;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

fn jacobi_derivative<T: Real>(n: usize, a: T, b: T, x: T, pn: T, pn1: T) -> T {
    let two = lit::<T>(2.0);
    let nn = from_usize::<T>(n);
    let s = two * nn + a + b;
    (nn * ((a - b) - s * x) * pn + two * (nn + a) * (nn + b) * pn1) / (s * (T::one() - x) * (T::one() + x))
}

/// Gauss–Jacobi rule for the weight (1-t)^a (1+t)^b on (-1, 1).
///
/// Nodes come from the eigenvalues of the Jacobi matrix and are then polished
/// with Newton steps on P_n^{(a,b)}; weights use the closed-form Christoffel
/// numbers. The construction always runs in f64; `f32` rules are rounded
/// copies.
pub fn gauss_jacobi_rule<T: Real>(n: usize, a: T, b: T) -> Result<QuadratureRule<T>> {
    let r = jacobi_rule_native::<f64>(n, to_f64(a), to_f64(b))?;
    QuadratureRule::new(
        1,
        r.nodes.iter().map(|&v| lit::<T>(v)).collect(),
        r.weights.iter().map(|&v| lit::<T>(v)).collect(),
        r.domain,
    )
}

fn jacobi_rule_native<T: Real>(n: usize, a: T, b: T) -> Result<QuadratureRule<T>> {
    if n == 0 {
        return Err(DunklError::domain("Gauss-Jacobi rule needs n >= 1"));
    }
    if !(a > -T::one() && b > -T::one()) || !a.is_finite() || !b.is_finite() {
        return Err(DunklError::domain(format!(
            "Gauss-Jacobi exponents must exceed -1, got a={a}, b={b}"
        )));
    }
    let (diag, off) = jacobi_recurrence(n, a, b);
    let (mut nodes, first) = tridiagonal_eigen(diag, off)?;
    let two = lit::<T>(2.0);
    let mu0 =
        two.powf(a + b + T::one()) * gamma_unchecked(a + T::one()) * gamma_unchecked(b + T::one()) / gamma_unchecked(a + b + two);
    let gw_weights: Vec<T> = first.iter().map(|&v| mu0 * v * v).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| nodes[i].partial_cmp(&nodes[j]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_nodes: Vec<T> = order.iter().map(|&i| nodes[i]).collect();
    let sorted_gw: Vec<T> = order.iter().map(|&i| gw_weights[i]).collect();
    nodes = sorted_nodes;

    let nn = from_usize::<T>(n);
    let log_c = ln_gamma_unchecked(nn + a + T::one()) + ln_gamma_unchecked(nn + b + T::one())
        - ln_gamma_unchecked(nn + a + b + T::one())
        - ln_gamma_unchecked(nn + T::one());
    let c = log_c.exp() * two.powf(a + b + T::one());
    let mut weights = Vec::with_capacity(n);
    for (i, x) in nodes.iter_mut().enumerate() {
        let mut xi = *x;
        for _ in 0..3 {
            let (pn, pn1) = jacobi_pair(n, a, b, xi);
            let dp = jacobi_derivative(n, a, b, xi, pn, pn1);
            let step = pn / dp;
            if !step.is_finite() {
                break;
            }
            let cand = xi - step;
            if cand <= -T::one() || cand >= T::one() {
                break;
            }
            xi = cand;
        }
        let (pn, pn1) = jacobi_pair(n, a, b, xi);
        let dp = jacobi_derivative(n, a, b, xi, pn, pn1);
        let w = c / ((T::one() - xi) * (T::one() + xi) * dp * dp);
        if w.is_finite() && w > T::zero() {
            *x = xi;
            weights.push(w);
        } else {
            weights.push(sorted_gw[i]);
        }
    }
    QuadratureRule::new(
        1,
        nodes,
        weights,
        Domain::JacobiInterval {
            a: to_f64(a),
            b: to_f64(b),
        },
    )
}

pub fn gauss_legendre_rule<T: Real>(n: usize) -> Result<QuadratureRule<T>> {
    gauss_jacobi_rule(n, T::zero(), T::zero())
}

type CacheKey = (TypeId, usize, u64, u64);

fn rule_cache() -> &'static Mutex<HashMap<CacheKey, Arc<dyn Any + Send + Sync>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<dyn Any + Send + Sync>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoized [`gauss_jacobi_rule`].
pub fn cached_jacobi<T: Real>(n: usize, a: T, b: T) -> Result<Arc<QuadratureRule<T>>> {
    let key = (TypeId::of::<T>(), n, to_f64(a).to_bits(), to_f64(b).to_bits());
    if let Some(hit) = rule_cache().lock().expect("rule cache poisoned").get(&key) {
        if let Ok(rule) = Arc::clone(hit).downcast::<QuadratureRule<T>>() {
            return Ok(rule);
        }
    }
    let rule = Arc::new(gauss_jacobi_rule(n, a, b)?);
    rule_cache()
        .lock()
        .expect("rule cache poisoned")
        .insert(key, rule.clone() as Arc<dyn Any + Send + Sync>);
    Ok(rule)
}

/// Surface area of S^{d-1}: 2π^{d/2}/Γ(d/2).
pub fn sphere_area<T: Real>(d: usize) -> T {
    let half_d = from_usize::<T>(d) * lit(0.5);
    lit::<T>(2.0) * T::PI().powf(half_d) / gamma_unchecked(half_d)
}

/// Rule on S^{d-1} with the standard (unnormalized) surface measure.
///
/// d = 1: the two points ±1; d = 2: `n` equispaced angles; d = 3: `n`-point
/// Gauss–Legendre in cos θ times a `2n`-point trapezoid in φ.
pub fn sphere_rule<T: Real>(d: usize, n: usize) -> Result<QuadratureRule<T>> {
    match d {
        1 => QuadratureRule::new(1, vec![-T::one(), T::one()], vec![T::one(), T::one()], Domain::Sphere { d }),
        2 => {
            if n == 0 {
                return Err(DunklError::domain("sphere rule needs n >= 1"));
            }
            let step = T::TAU() / from_usize::<T>(n);
            let mut nodes = Vec::with_capacity(2 * n);
            for k in 0..n {
                let th = step * from_usize::<T>(k);
                nodes.push(th.cos());
                nodes.push(th.sin());
            }
            QuadratureRule::new(2, nodes, vec![step; n], Domain::Sphere { d })
        }
        3 => {
            let gl = cached_jacobi::<T>(n, T::zero(), T::zero())?;
            let nphi = 2 * n;
            let dphi = T::TAU() / from_usize::<T>(nphi);
            let mut nodes = Vec::with_capacity(3 * n * nphi);
            let mut weights = Vec::with_capacity(n * nphi);
            for i in 0..gl.len() {
                let ct = gl.x(i);
                let st = ((T::one() - ct) * (T::one() + ct)).sqrt();
                for k in 0..nphi {
                    let ph = dphi * from_usize::<T>(k);
                    nodes.extend_from_slice(&[st * ph.cos(), st * ph.sin(), ct]);
                    weights.push(gl.weights()[i] * dphi);
                }
            }
            QuadratureRule::new(3, nodes, weights, Domain::Sphere { d })
        }
        _ => Err(DunklError::UnsupportedDimension(d)),
    }
}

/// Double-exponential (tanh–sinh) rule on (-1, 1).
///
/// Robust against algebraic endpoint singularities, including jumps and
/// integrable blow-ups; used for panels whose endpoints sit on singular sets.
#[derive(Debug, Clone)]
pub struct TanhSinh<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    /// 1 - |node|, computed without cancellation.
    comp: Vec<T>,
}

impl<T: Real> TanhSinh<T> {
    /// Step h = 2^{-level}.
    pub fn new(level: u32) -> Self {
        let h = lit::<T>(0.5).powi(level as i32);
        let half_pi = T::FRAC_PI_2();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut comp = Vec::new();
        let tiny = T::min_positive_value().sqrt();
        let mut k: i64 = 0;
        loop {
            let t = h * lit::<T>(k as f64);
            let u = half_pi * t.sinh();
            let x = u.tanh();
            let ch = u.cosh();
            let c = (-u).exp() / ch;
            let w = h * half_pi * t.cosh() / (ch * ch);
            if w < tiny || !(c > T::zero()) {
                break;
            }
            nodes.push(x);
            weights.push(w);
            comp.push(c);
            if k > 0 {
                nodes.push(-x);
                weights.push(w);
                comp.push(c);
            }
            k += 1;
        }
        Self { nodes, weights, comp }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_lo^hi f(x) dx, skipping nodes that round onto an endpoint.
    pub fn integrate<F: FnMut(T) -> T>(&self, lo: T, hi: T, mut f: F) -> T {
        if !(hi > lo) {
            return T::zero();
        }
        let half = (hi - lo) * lit(0.5);
        let mid = (hi + lo) * lit(0.5);
        let mut acc = T::zero();
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let x = mid + half * t;
            if x <= lo || x >= hi {
                continue;
            }
            acc += w * f(x);
        }
        acc * half
    }

    /// ∫_lo^hi f dx where the integrand receives each node as (base, offset)
    /// with base the nearer endpoint; offsets keep full relative precision
    /// near the endpoints, which matters for integrable endpoint blow-ups.
    pub fn integrate_offsets<F: FnMut(T, T) -> T>(&self, lo: T, hi: T, mut f: F) -> T {
        if !(hi > lo) {
            return T::zero();
        }
        let half = (hi - lo) * lit(0.5);
        let mut acc = T::zero();
        for i in 0..self.nodes.len() {
            let off = half * self.comp[i];
            if !(off > T::zero()) {
                continue;
            }
            let v = if self.nodes[i] >= T::zero() { f(hi, -off) } else { f(lo, off) };
            acc += self.weights[i] * v;
        }
        acc * half
    }
}
