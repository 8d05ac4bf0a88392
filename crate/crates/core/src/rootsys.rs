//! Root systems, reflection groups, multiplicities and the weight ω_k.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DunklError, Result};
use crate::field::ScalarField;
use crate::scalar::{dot, from_usize, lit, to_f64, CompensatedSum, Real};
use crate::specfun::{cached_jacobi, gamma_unchecked, sphere_rule, Domain, QuadOptions, QuadratureRule};

const GROUP_BOUND: usize = 10_000;

/// σ_α(x) = x − 2⟨α,x⟩α/‖α‖².
pub fn reflect<T: Real>(alpha: &[T], x: &[T]) -> Result<Vec<T>> {
    if alpha.len() != x.len() {
        return Err(DunklError::domain("reflect: dimension mismatch"));
    }
    let a2 = dot(alpha, alpha);
    if !(a2 > T::zero()) {
        return Err(DunklError::domain("reflect: zero root"));
    }
    let c = lit::<T>(2.0) * dot(alpha, x) / a2;
    Ok(x.iter().zip(alpha).map(|(&v, &a)| v - c * a).collect())
}

/// Orthogonal d×d matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoMatrix<T> {
    d: usize,
    m: Vec<T>,
}

impl<T: Real> OrthoMatrix<T> {
    pub fn identity(d: usize) -> Self {
        let mut m = vec![T::zero(); d * d];
        for i in 0..d {
            m[i * d + i] = T::one();
        }
        Self { d, m }
    }

    /// Matrix of the reflection σ_α.
    pub fn reflection(alpha: &[T]) -> Self {
        let d = alpha.len();
        let a2 = dot(alpha, alpha);
        let mut m = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { T::one() } else { T::zero() };
                m[i * d + j] = delta - lit::<T>(2.0) * alpha[i] * alpha[j] / a2;
            }
        }
        Self { d, m }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.m[i * self.d + j]
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.d)
            .map(|i| (0..self.d).fold(T::zero(), |acc, j| acc + self.m[i * self.d + j] * x[j]))
            .collect()
    }

    pub fn compose(&self, other: &Self) -> Self {
        let d = self.d;
        let mut m = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = (0..d).fold(T::zero(), |acc, l| acc + self.entry(i, l) * other.entry(l, j));
            }
        }
        Self { d, m }
    }

    pub fn transpose(&self) -> Self {
        let d = self.d;
        let mut m = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = self.entry(j, i);
            }
        }
        Self { d, m }
    }

    /// max |(wᵀw − I)_{ij}|.
    pub fn orthogonality_defect(&self) -> T {
        let p = self.transpose().compose(self);
        let id = Self::identity(self.d);
        p.m.iter().zip(&id.m).fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    fn key(&self) -> Vec<i64> {
        self.m.iter().map(|&v| (to_f64(v) * 1e6).round() as i64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    /// ℤ₂^d: roots ±√2 e_j, one orbit per axis.
    Z2Power {
        d: usize,
    },
    /// I₂(m): the symmetry group of the regular m-gon.
    Dihedral {
        m: usize,
    },
    Explicit,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Z2Power { d } => write!(f, "Z2^{d}"),
            GroupKind::Dihedral { m } => write!(f, "dihedral({m})"),
            GroupKind::Explicit => write!(f, "explicit"),
        }
    }
}

/// A normalized root system (‖α‖² = 2) with its positive subsystem,
/// root orbits and reflection group.
#[derive(Debug, Clone)]
pub struct RootSystem<T> {
    d: usize,
    kind: GroupKind,
    roots: Vec<Vec<T>>,
    positive: Vec<usize>,
    orbit: Vec<usize>,
    n_orbits: usize,
    group: Vec<OrthoMatrix<T>>,
    beta: Vec<T>,
}

fn root_key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|&x| (x * 1e6).round() as i64).collect()
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = i;
    while parent[c] != r {
        let n = parent[c];
        parent[c] = r;
        c = n;
    }
    r
}

impl<T: Real> RootSystem<T> {
    /// Build from an explicit list of roots (any lengths; normalized here).
    /// Both α and −α may be listed or only one of them.
    pub fn explicit(roots: &[Vec<T>]) -> Result<Self> {
        let raw: Vec<Vec<f64>> = roots.iter().map(|r| r.iter().map(|&v| to_f64(v)).collect()).collect();
        Self::build(&raw, GroupKind::Explicit)
    }

    /// ℤ₂^d, roots ±√2 e_j.
    pub fn z2_power(d: usize) -> Result<Self> {
        let raw: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                e
            })
            .collect();
        Self::build(&raw, GroupKind::Z2Power { d })
    }

    /// I₂(m), m ≥ 1: roots orthogonal to the m mirror lines at angles jπ/m.
    pub fn dihedral(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(DunklError::domain("dihedral(m) needs m >= 1"));
        }
        let raw: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let th = std::f64::consts::PI * j as f64 / m as f64;
                vec![-th.sin(), th.cos()]
            })
            .collect();
        Self::build(&raw, GroupKind::Dihedral { m })
    }

    fn build(raw: &[Vec<f64>], kind: GroupKind) -> Result<Self> {
        let d = raw
            .first()
            .map(|r| r.len())
            .ok_or_else(|| DunklError::NotARootSystem("empty root list".into()))?;
        if !(1..=3).contains(&d) {
            return Err(DunklError::UnsupportedDimension(d));
        }
        let tol = 1e-6;
        // normalize, add negatives, dedupe
        let mut roots: Vec<Vec<f64>> = Vec::new();
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        for r in raw {
            if r.len() != d {
                return Err(DunklError::NotARootSystem("roots of mixed dimension".into()));
            }
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(DunklError::NotARootSystem("zero or non-finite root".into()));
            }
            let s = std::f64::consts::SQRT_2 / n;
            for sign in [1.0, -1.0] {
                let v: Vec<f64> = r.iter().map(|x| sign * s * x).collect();
                let k = root_key(&v);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(k) {
                    e.insert(roots.len());
                    roots.push(v);
                }
            }
        }
        // R ∩ ℝα = {±α}
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                let c: f64 = roots[i].iter().zip(&roots[j]).map(|(a, b)| a * b).sum();
                if (c.abs() - 2.0).abs() < tol && c > 0.0 {
                    return Err(DunklError::NotARootSystem("duplicate root".into()));
                }
                if (c.abs() - 2.0).abs() < tol
                    && root_key(&roots[i].iter().map(|v| -v).collect::<Vec<_>>()) != root_key(&roots[j])
                {
                    return Err(DunklError::NotARootSystem("parallel roots other than ±α".into()));
                }
            }
        }
        // closure under reflections, and orbits
        let mut parent: Vec<usize> = (0..roots.len()).collect();
        let lookup = |v: &[f64]| -> Option<usize> {
            let k = root_key(v);
            if let Some(&i) = index.get(&k) {
                return Some(i);
            }
            roots.iter().position(|r| r.iter().zip(v).all(|(a, b)| (a - b).abs() < tol))
        };
        for a in &roots {
            for (i, b) in roots.iter().enumerate() {
                let img = reflect(a, b).expect("nonzero root");
                match lookup(&img) {
                    Some(j) => {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        if ri != rj {
                            parent[ri.max(rj)] = ri.min(rj);
                        }
                    }
                    None => {
                        return Err(DunklError::NotARootSystem(format!(
                            "reflection of {b:?} in {a:?} is not a root"
                        )))
                    }
                }
            }
        }
        // positive subsystem from a generic vector
        let mut beta: Vec<f64> = (0..d).map(|j| 1.0 / (j as f64 + 1.0)).collect();
        let mut attempt = 0;
        while roots
            .iter()
            .any(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-9)
        {
            attempt += 1;
            for (j, b) in beta.iter_mut().enumerate() {
                *b += 1e-3 * ((attempt * (j + 1) * (j + 1)) as f64).sin();
            }
            if attempt > 1000 {
                return Err(DunklError::NotARootSystem("no generic vector found".into()));
            }
        }
        // keep the caller's ordering: the positive representative of each pair
        let positive: Vec<usize> = (0..roots.len())
            .filter(|&i| roots[i].iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() > 0.0)
            .collect();
        // orbit ids in order of first positive root
        let mut orbit_id: HashMap<usize, usize> = HashMap::new();
        for &p in &positive {
            let r = find(&mut parent, p);
            let next = orbit_id.len();
            orbit_id.entry(r).or_insert(next);
        }
        let orbit: Vec<usize> = (0..roots.len()).map(|i| orbit_id[&find(&mut parent, i)]).collect();
        let n_orbits = orbit_id.len();
        // group generation
        let gens: Vec<OrthoMatrix<f64>> = positive.iter().map(|&p| OrthoMatrix::reflection(&roots[p])).collect();
        let id = OrthoMatrix::<f64>::identity(d);
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        seen.insert(id.key());
        let mut group = vec![id];
        let mut frontier = 0;
        while frontier < group.len() {
            let g = group[frontier].clone();
            frontier += 1;
            for s in &gens {
                let h = s.compose(&g);
                if seen.insert(h.key()) {
                    group.push(h);
                    if group.len() > GROUP_BOUND {
                        return Err(DunklError::NotARootSystem(format!(
                            "group generation exceeded {GROUP_BOUND} elements"
                        )));
                    }
                }
            }
        }
        let cast = |v: &[f64]| -> Vec<T> { v.iter().map(|&x| lit::<T>(x)).collect() };
        Ok(Self {
            d,
            kind,
            roots: roots.iter().map(|r| cast(r)).collect(),
            positive,
            orbit,
            n_orbits,
            group: group.iter().map(|g| OrthoMatrix { d, m: cast(&g.m) }).collect(),
            beta: cast(&beta),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn roots(&self) -> &[Vec<T>] {
        &self.roots
    }

    pub fn positive_roots(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.positive.iter().map(move |&i| self.roots[i].as_slice())
    }

    pub fn n_positive(&self) -> usize {
        self.positive.len()
    }

    /// Orbit index of the i-th positive root.
    pub fn positive_orbit(&self, i: usize) -> usize {
        self.orbit[self.positive[i]]
    }

    /// Orbit index of an arbitrary root (by index into [`roots`](Self::roots)).
    pub fn root_orbit(&self, i: usize) -> usize {
        self.orbit[i]
    }

    pub fn n_orbits(&self) -> usize {
        self.n_orbits
    }

    pub fn group(&self) -> &[OrthoMatrix<T>] {
        &self.group
    }

    pub fn generic_vector(&self) -> &[T] {
        &self.beta
    }

    /// True when every wall is a coordinate hyperplane.
    pub fn is_axis_aligned(&self) -> bool {
        let eps = lit::<T>(1e-6);
        self.positive_roots().all(|r| r.iter().filter(|v| v.abs() > eps).count() == 1)
    }

    /// Index of the root equal to `v`, if any.
    pub fn find_root(&self, v: &[T]) -> Option<usize> {
        let eps = lit::<T>(1e-5);
        self.roots
            .iter()
            .position(|r| r.iter().zip(v).all(|(&a, &b)| (a - b).abs() < eps))
    }

    /// True if ⟨α, x⟩ ≠ 0 for every root (up to `eps`).
    pub fn is_regular(&self, x: &[T], eps: T) -> bool {
        self.positive_roots().all(|r| dot(r, x).abs() > eps)
    }
}

/// Values k(α) per root orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplicity<T> {
    values: Vec<T>,
}

impl<T: Real> Multiplicity<T> {
    pub fn per_orbit(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(DunklError::domain("multiplicities must be finite and >= 0"));
        }
        Ok(Self { values })
    }

    pub fn uniform(k: T) -> Result<Self> {
        Self::per_orbit(vec![k])
    }

    /// From one value per positive root; fails unless the values are constant
    /// on W-orbits.
    pub fn per_positive_root(rs: &RootSystem<T>, values: &[T]) -> Result<Self> {
        if values.len() != rs.n_positive() {
            return Err(DunklError::contract(format!(
                "expected {} multiplicities, got {}",
                rs.n_positive(),
                values.len()
            )));
        }
        let mut orbit_vals: Vec<Option<T>> = vec![None; rs.n_orbits()];
        for (i, &v) in values.iter().enumerate() {
            let o = rs.positive_orbit(i);
            match orbit_vals[o] {
                None => orbit_vals[o] = Some(v),
                Some(u) if (u - v).abs() <= lit::<T>(1e-12) * (T::one() + u.abs()) => {}
                Some(_) => return Err(DunklError::domain("multiplicity is not W-invariant")),
            }
        }
        Self::per_orbit(orbit_vals.into_iter().map(|v| v.unwrap_or_else(T::zero)).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// ∏_j |x_j|^{2α_j}; only for ℤ₂^d.
    Product,
    /// ∏_{α∈R₊} |⟨α,x⟩|^{2k(α)} with ‖α‖² = 2.
    RootNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MehtaSource {
    ClosedForm,
    PolarQuadrature,
}

/// Everything derived from (R, k): γ, ω_k, c_k and d_k.
#[derive(Clone)]
pub struct WeightContext<T> {
    system: Arc<RootSystem<T>>,
    multiplicity: Multiplicity<T>,
    k_pos: Vec<T>,
    convention: WeightConvention,
    gamma: T,
    mehta: T,
    mehta_source: MehtaSource,
    sphere_mass: T,
    sphere: Arc<QuadratureRule<T>>,
}

impl<T: Real> fmt::Debug for WeightContext<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightContext")
            .field("group", self.system.kind())
            .field("multiplicity", &self.multiplicity.values())
            .field("convention", &self.convention)
            .field("gamma", &self.gamma)
            .field("mehta", &self.mehta)
            .field("sphere_mass", &self.sphere_mass)
            .finish()
    }
}

/// Nodes per arc (d = 2) or per angular factor (d = 3) of the weighted sphere rule.
const SPHERE_ORDER: usize = 48;

impl<T: Real> WeightContext<T> {
    pub fn new(system: RootSystem<T>, multiplicity: Multiplicity<T>, convention: WeightConvention) -> Result<Self> {
        let mut vals = multiplicity.values().to_vec();
        if vals.len() == 1 && system.n_orbits() > 1 {
            vals = vec![vals[0]; system.n_orbits()];
        }
        if vals.len() != system.n_orbits() {
            return Err(DunklError::contract(format!(
                "root system has {} orbits, got {} multiplicities",
                system.n_orbits(),
                vals.len()
            )));
        }
        if convention == WeightConvention::Product && !matches!(system.kind(), GroupKind::Z2Power { .. }) {
            return Err(DunklError::UnsupportedGroup("product weight convention requires Z2^d".into()));
        }
        let multiplicity = Multiplicity::per_orbit(vals)?;
        let k_pos: Vec<T> = (0..system.n_positive())
            .map(|i| multiplicity.values()[system.positive_orbit(i)])
            .collect();
        let gamma = k_pos.iter().fold(T::zero(), |a, &k| a + k);
        let mut ctx = Self {
            system: Arc::new(system),
            multiplicity,
            k_pos,
            convention,
            gamma,
            mehta: T::nan(),
            mehta_source: MehtaSource::ClosedForm,
            sphere_mass: T::nan(),
            sphere: Arc::new(sphere_rule(1, 1)?),
        };
        ctx.sphere = Arc::new(ctx.weighted_sphere_rule(SPHERE_ORDER)?);
        ctx.sphere_mass = ctx.sphere.total_mass();
        match ctx.closed_form_mehta() {
            Some(c) => ctx.mehta = c,
            None => {
                ctx.mehta = lit::<T>(2.0) / (ctx.sphere_mass * gamma_unchecked(gamma + ctx.half_d()));
                ctx.mehta_source = MehtaSource::PolarQuadrature;
            }
        }
        Ok(ctx)
    }

    /// ℤ₂^d with parameters (α_1, …, α_d) and the product weight ∏|x_j|^{2α_j}.
    pub fn z2(alphas: &[T]) -> Result<Self> {
        let rs = RootSystem::z2_power(alphas.len())?;
        Self::new(rs, Multiplicity::per_orbit(alphas.to_vec())?, WeightConvention::Product)
    }

    /// Rank one: ℤ₂ on ℝ with ω(x) = |x|^{2γ}.
    pub fn rank_one(gamma: T) -> Result<Self> {
        Self::z2(&[gamma])
    }

    /// I₂(m) with one value per orbit (one orbit for odd m, two for even m).
    pub fn dihedral(m: usize, k: &[T]) -> Result<Self> {
        Self::new(
            RootSystem::dihedral(m)?,
            Multiplicity::per_orbit(k.to_vec())?,
            WeightConvention::RootNormalized,
        )
    }

    pub fn from_config(cfg: &ContextConfig) -> Result<Self> {
        let group = GroupSpec::parse(&cfg.group)?;
        let ks: Vec<T> = cfg.multiplicities.iter().map(|&v| lit::<T>(v)).collect();
        let (rs, default_conv) = match &group {
            GroupSpec::Z2Power(d) => (RootSystem::z2_power(*d)?, WeightConvention::Product),
            GroupSpec::Dihedral(m) => (RootSystem::dihedral(*m)?, WeightConvention::RootNormalized),
            GroupSpec::Explicit(roots) => {
                let r: Vec<Vec<T>> = roots.iter().map(|v| v.iter().map(|&x| lit::<T>(x)).collect()).collect();
                (RootSystem::explicit(&r)?, WeightConvention::RootNormalized)
            }
        };
        if let Some(d) = cfg.d {
            if d != rs.dim() {
                return Err(DunklError::contract(format!(
                    "group acts on dimension {}, config says {d}",
                    rs.dim()
                )));
            }
        }
        let mult = if ks.len() == rs.n_positive() && ks.len() != rs.n_orbits() {
            Multiplicity::per_positive_root(&rs, &ks)?
        } else {
            Multiplicity::per_orbit(ks)?
        };
        Self::new(rs, mult, cfg.convention.unwrap_or(default_conv))
    }

    fn half_d(&self) -> T {
        from_usize::<T>(self.dim()) * lit(0.5)
    }

    fn closed_form_mehta(&self) -> Option<T> {
        let half = lit::<T>(0.5);
        let two = lit::<T>(2.0);
        match self.system.kind() {
            GroupKind::Z2Power { .. } => {
                let p = self.k_pos.iter().fold(T::one(), |acc, &a| acc / gamma_unchecked(a + half));
                Some(match self.convention {
                    WeightConvention::Product => p,
                    WeightConvention::RootNormalized => p * two.powf(-self.gamma),
                })
            }
            GroupKind::Dihedral { m } => {
                let vals = self.multiplicity.values();
                let k = vals[0];
                if vals.iter().any(|&v| v != k) {
                    return None;
                }
                // ∫ e^{-|x|²} ω = 2^{-γ} π ∏_{deg ∈ {2, m}} Γ(1 + k·deg)/Γ(1 + k)
                let g1 = gamma_unchecked(T::one() + k);
                let integral = two.powf(-self.gamma)
                    * T::PI()
                    * (gamma_unchecked(T::one() + two * k) / g1)
                    * (gamma_unchecked(T::one() + from_usize::<T>(*m) * k) / g1);
                Some(T::one() / integral)
            }
            GroupKind::Explicit => None,
        }
    }

    pub fn system(&self) -> &RootSystem<T> {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn multiplicity(&self) -> &Multiplicity<T> {
        &self.multiplicity
    }

    /// k(α) for the i-th positive root.
    pub fn k_positive(&self) -> &[T] {
        &self.k_pos
    }

    pub fn convention(&self) -> WeightConvention {
        self.convention
    }

    /// γ = Σ_{α∈R₊} k(α).
    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// c_k = (∫ e^{-‖x‖²} ω_k dx)^{-1}.
    pub fn mehta(&self) -> T {
        self.mehta
    }

    pub fn mehta_source(&self) -> MehtaSource {
        self.mehta_source
    }

    /// d_k = ∫_{S^{d-1}} ω_k dσ.
    pub fn sphere_mass(&self) -> T {
        self.sphere_mass
    }

    /// Per-axis parameters (α_1, …, α_d) when the group is ℤ₂^d.
    pub fn axis_alphas(&self) -> Option<&[T]> {
        match self.system.kind() {
            GroupKind::Z2Power { .. } => Some(&self.k_pos),
            _ => None,
        }
    }

    /// Per-axis parameters, or an unsupported-group error.
    pub fn require_product(&self) -> Result<&[T]> {
        self.axis_alphas().ok_or_else(|| {
            DunklError::UnsupportedGroup(format!("{} (explicit densities exist only for Z2^d)", self.system.kind()))
        })
    }

    /// Whether the weight is exactly ∏|x_j|^{2α_j}.
    pub fn is_product_weight(&self) -> bool {
        self.convention == WeightConvention::Product
    }

    /// ω_k(x).
    pub fn weight(&self, x: &[T]) -> T {
        match self.convention {
            WeightConvention::Product => x
                .iter()
                .zip(&self.k_pos)
                .fold(T::one(), |acc, (&v, &a)| acc * pow_abs(v, a + a)),
            WeightConvention::RootNormalized => self
                .system
                .positive_roots()
                .zip(&self.k_pos)
                .fold(T::one(), |acc, (r, &k)| acc * pow_abs(dot(r, x), k + k)),
        }
    }

    /// Rule on S^{d-1} whose weights already include ω_k(β)dσ(β).
    pub fn sphere_weighted_rule(&self) -> &QuadratureRule<T> {
        &self.sphere
    }

    /// Build a weighted sphere rule of the given order.
    ///
    /// d = 2: Gauss–Jacobi on each arc between consecutive walls, with the
    /// wall exponents 2k(α) at the arc endpoints. d = 3 with coordinate walls:
    /// octant-wise Jacobi rules in (θ, φ). Other d = 3 groups fall back to the
    /// plain product rule.
    pub fn weighted_sphere_rule(&self, n: usize) -> Result<QuadratureRule<T>> {
        let d = self.dim();
        match d {
            1 => {
                let nodes = vec![-T::one(), T::one()];
                let w = vec![self.weight(&[-T::one()]), self.weight(&[T::one()])];
                QuadratureRule::new(1, nodes, w, Domain::Sphere { d })
            }
            2 => self.arc_rule(n),
            3 if self.system.is_axis_aligned() => self.octant_rule(n),
            3 => {
                let base = sphere_rule::<T>(3, 4 * n)?;
                let mut nodes = Vec::new();
                let mut w = Vec::new();
                for (x, wi) in base.iter() {
                    let om = self.weight(x);
                    if om > T::zero() {
                        nodes.extend_from_slice(x);
                        w.push(wi * om);
                    }
                }
                QuadratureRule::new(3, nodes, w, Domain::Sphere { d })
            }
            _ => Err(DunklError::UnsupportedDimension(d)),
        }
    }

    fn arc_rule(&self, n: usize) -> Result<QuadratureRule<T>> {
        let tau = T::TAU();
        let mut walls: Vec<(T, T)> = Vec::new(); // (angle, exponent)
        for (r, &k) in self.system.positive_roots().zip(&self.k_pos) {
            if k == T::zero() {
                continue;
            }
            let base = r[1].atan2(r[0]) + T::FRAC_PI_2();
            for shift in [T::zero(), T::PI()] {
                let mut a = (base + shift) % tau;
                if a < T::zero() {
                    a += tau;
                }
                walls.push((a, k + k));
            }
        }
        walls.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite angles"));
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if walls.is_empty() {
            let base = sphere_rule::<T>(2, 2 * n)?;
            for (x, w) in base.iter() {
                nodes.extend_from_slice(x);
                weights.push(w * self.weight(x));
            }
            return QuadratureRule::new(2, nodes, weights, Domain::Sphere { d: 2 });
        }
        let m = walls.len();
        for i in 0..m {
            let (lo, bl) = walls[i];
            let (mut hi, ar) = walls[(i + 1) % m];
            if i + 1 == m {
                hi += tau;
            }
            let rule = cached_jacobi(n, ar, bl)?;
            let half = (hi - lo) * lit(0.5);
            let mid = (hi + lo) * lit(0.5);
            let scale = half.powf(ar + bl + T::one());
            for j in 0..rule.len() {
                let th = mid + half * rule.x(j);
                let b = [th.cos(), th.sin()];
                let sing = (hi - th).powf(ar) * (th - lo).powf(bl);
                weights.push(rule.weights()[j] * scale * self.weight(&b) / sing);
                nodes.extend_from_slice(&b);
            }
        }
        QuadratureRule::new(2, nodes, weights, Domain::Sphere { d: 2 })
    }

    fn octant_rule(&self, n: usize) -> Result<QuadratureRule<T>> {
        // exponent of |x_j| in ω on the axis-aligned system
        let mut e = [T::zero(); 3];
        for (r, &k) in self.system.positive_roots().zip(&self.k_pos) {
            let j = (0..3).find(|&j| r[j].abs() > lit(1e-6)).expect("nonzero root");
            e[j] += k + k;
        }
        let one = T::one();
        let half_pi = T::FRAC_PI_2();
        // θ ∈ (0, π/2): sin^{e0+e1+1} at 0, cos^{e2} at π/2
        let rt = cached_jacobi(n, e[2], e[0] + e[1] + one)?;
        // φ ∈ (0, π/2): sin^{e1} at 0, cos^{e0} at π/2
        let rp = cached_jacobi(n, e[0], e[1])?;
        let ht = half_pi * lit(0.5);
        let st = ht.powf(e[2] + e[0] + e[1] + one + one);
        let sp = ht.powf(e[0] + e[1] + one);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for i in 0..rt.len() {
            let th = ht + ht * rt.x(i);
            let (s, c) = th.sin_cos();
            let sing_t = (half_pi - th).powf(e[2]) * th.powf(e[0] + e[1] + one);
            for j in 0..rp.len() {
                let ph = ht + ht * rp.x(j);
                let (sf, cf) = ph.sin_cos();
                let sing_p = (half_pi - ph).powf(e[0]) * ph.powf(e[1]);
                let b = [s * cf, s * sf, c];
                let w = rt.weights()[i] * st * rp.weights()[j] * sp * self.weight(&b) * s / (sing_t * sing_p);
                for mask in 0..8u8 {
                    let sb: Vec<T> = (0..3).map(|l| if mask & (1 << l) != 0 { -b[l] } else { b[l] }).collect();
                    nodes.extend_from_slice(&sb);
                    weights.push(w);
                }
            }
        }
        QuadratureRule::new(3, nodes, weights, Domain::Sphere { d: 3 })
    }

    /// ∫_{S^{d-1}} g(β) ω_k(β) dσ(β).
    pub fn sphere_integrate<F: FnMut(&[T]) -> T>(&self, mut g: F) -> T {
        let mut acc = CompensatedSum::new();
        for (x, w) in self.sphere.iter() {
            acc.add(w * g(x));
        }
        acc.value()
    }

    /// ∫ f ω_k dx in polar coordinates, doubling the radial order until two
    /// successive values agree to `opts.rtol` relative to ∫ |f| ω_k dx.
    pub fn polar_integrate(&self, f: &ScalarField<T>, opts: &QuadOptions) -> Result<T> {
        let radius = f.support_radius().unwrap_or_else(|| lit(opts.truncation));
        let d = self.dim();
        let expo = self.gamma + self.gamma + from_usize::<T>(d) - T::one();
        // (∫_S f(rβ)ω dσ, ∫_S |f(rβ)|ω dσ)
        let shell = |r: T| -> (T, T) {
            match f.profile() {
                Some(p) => {
                    let v = self.sphere_mass * p.eval(r);
                    (v, v.abs())
                }
                None => {
                    let mut acc = CompensatedSum::new();
                    let mut abs = T::zero();
                    let mut x = vec![T::zero(); d];
                    for (b, w) in self.sphere.iter() {
                        for l in 0..d {
                            x[l] = b[l] * r;
                        }
                        let v = w * f.eval(&x);
                        acc.add(v);
                        abs += v.abs();
                    }
                    (acc.value(), abs)
                }
            }
        };
        let radial = |n: usize| -> Result<(T, T)> {
            let rule = cached_jacobi(n, T::zero(), expo)?;
            let half = radius * lit(0.5);
            let scale = half.powf(expo + T::one());
            let mut acc = CompensatedSum::new();
            let mut abs = T::zero();
            for i in 0..rule.len() {
                let (v, a) = shell(half + half * rule.x(i));
                acc.add(rule.weights()[i] * v);
                abs += rule.weights()[i] * a;
            }
            Ok((acc.value() * scale, abs * scale))
        };
        let tol = lit::<T>(opts.rtol);
        let mut n = opts.order.max(8);
        let (mut prev, _) = radial(n)?;
        let l1;
        loop {
            let next_n = 2 * n;
            let (cur, abs) = radial(next_n)?;
            let err = (cur - prev).abs();
            if err <= tol * abs {
                prev = cur;
                l1 = abs;
                break;
            }
            if 2 * next_n > opts.max_order.max(opts.order) {
                return Err(DunklError::Accuracy {
                    estimate: to_f64(cur),
                    error: to_f64(err),
                    requested: opts.rtol,
                });
            }
            prev = cur;
            n = next_n;
        }
        if f.support_radius().is_none() {
            let tail = shell(radius).1 * radius.powf(expo + T::one());
            if tail > tol * l1 {
                return Err(DunklError::Accuracy {
                    estimate: to_f64(prev),
                    error: to_f64(tail),
                    requested: opts.rtol,
                });
            }
        }
        Ok(prev)
    }

    /// Tensor Cartesian quadrature of ∫ e^{-‖x‖²} ω_k dx (independent of the
    /// polar route). ℤ₂^d uses per-axis Jacobi rules with the |x_j|^{2α_j}
    /// endpoint factor; other groups use split Gauss–Legendre, which is
    /// only accurate when the weight is smooth.
    pub fn gaussian_mass_cartesian(&self, n: usize) -> Result<T> {
        let d = self.dim();
        let l = lit::<T>(9.0);
        let exps: Vec<T> = match self.axis_alphas() {
            Some(a) => a.iter().map(|&v| v + v).collect(),
            None => vec![T::zero(); d],
        };
        let rules: Vec<Arc<QuadratureRule<T>>> = exps.iter().map(|&e| cached_jacobi(n, T::zero(), e)).collect::<Result<_>>()?;
        let half = l * lit(0.5);
        let mut acc = CompensatedSum::new();
        let mut idx = vec![0usize; d];
        let mut x = vec![T::zero(); d];
        'outer: loop {
            let mut base_w = T::one();
            let mut sing = T::one();
            for j in 0..d {
                let t = rules[j].x(idx[j]);
                x[j] = half + half * t;
                base_w *= rules[j].weights()[idx[j]] * half.powf(exps[j] + T::one());
                sing *= x[j].powf(exps[j]);
            }
            let g = (-dot(&x, &x)).exp() / sing;
            for mask in 0..(1usize << d) {
                let sx: Vec<T> = (0..d).map(|j| if mask & (1 << j) != 0 { -x[j] } else { x[j] }).collect();
                acc.add(base_w * g * self.weight(&sx));
            }
            for j in 0..d {
                idx[j] += 1;
                if idx[j] < n {
                    continue 'outer;
                }
                idx[j] = 0;
            }
            break;
        }
        Ok(acc.value())
    }
}

#[inline]
fn pow_abs<T: Real>(v: T, e: T) -> T {
    if e == T::zero() {
        T::one()
    } else {
        v.abs().powf(e)
    }
}

/// Group selector as accepted by configuration records and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupSpec {
    Z2Power(usize),
    Dihedral(usize),
    Explicit(Vec<Vec<f64>>),
}

impl GroupSpec {
    /// Accepts `z2^d`, `dihedral(m)` and `roots:a,b;c,d` (case-insensitive).
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || DunklError::contract(format!("unrecognized group '{s}'"));
        if let Some(rest) = t.strip_prefix("z2^") {
            return rest.trim().parse().map(GroupSpec::Z2Power).map_err(|_| bad());
        }
        if t == "z2" {
            return Ok(GroupSpec::Z2Power(1));
        }
        if let Some(rest) = t.strip_prefix("dihedral(").and_then(|r| r.strip_suffix(')')) {
            return rest.trim().parse().map(GroupSpec::Dihedral).map_err(|_| bad());
        }
        if let Some(rest) = t.strip_prefix("roots:") {
            let roots = rest
                .split(';')
                .map(|r| {
                    r.split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            return Ok(GroupSpec::Explicit(roots));
        }
        Err(bad())
    }
}

/// Serializable context description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextConfig {
    /// `Z2^d`, `dihedral(m)` or `roots:...`.
    pub group: String,
    /// One value per orbit, or one per positive root.
    pub multiplicities: Vec<f64>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub convention: Option<WeightConvention>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, rtol: f64) {
        assert!((a - b).abs() <= rtol * b.abs().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect(&[1.0, 0.0], &[3.0, 5.0]).unwrap(), vec![-3.0, 5.0]);
        let a = [0.3f64, -1.2, 0.7];
        let r = reflect(&a, &a).unwrap();
        for (u, v) in r.iter().zip(&a) {
            assert!((u + v).abs() < 1e-15);
        }
        let r = reflect(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap();
        assert!((r[0] - 0.0).abs() < 1e-15 && (r[1] + 1.0).abs() < 1e-15);
        assert!(reflect(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn group_orders() {
        assert_eq!(RootSystem::<f64>::z2_power(2).unwrap().group().len(), 4);
        assert_eq!(RootSystem::<f64>::z2_power(3).unwrap().group().len(), 8);
        assert_eq!(RootSystem::<f64>::explicit(&[vec![1.0, 0.0]]).unwrap().group().len(), 2);
        for m in 1..=8 {
            let rs = RootSystem::<f64>::dihedral(m).unwrap();
            assert_eq!(rs.group().len(), 2 * m, "m = {m}");
            assert_eq!(rs.n_orbits(), if m % 2 == 0 { 2 } else { 1 });
            for w in rs.group() {
                assert!(w.orthogonality_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn dihedral_group_matches_brute_force_rotations() {
        // I₂(3): three rotations by 2πj/3 and three reflections
        let rs = RootSystem::<f64>::dihedral(3).unwrap();
        let mut rotations = 0;
        for w in rs.group() {
            let det = w.entry(0, 0) * w.entry(1, 1) - w.entry(0, 1) * w.entry(1, 0);
            if det > 0.0 {
                rotations += 1;
                let ang = w.entry(1, 0).atan2(w.entry(0, 0));
                let j = (ang / (2.0 * PI / 3.0)).round();
                assert!((ang - j * 2.0 * PI / 3.0).abs() < 1e-12);
            }
        }
        assert_eq!(rotations, 3);
    }

    #[test]
    fn rejects_non_root_systems() {
        let bad = RootSystem::<f64>::explicit(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(matches!(bad, Err(DunklError::NotARootSystem(_))));
        let par = RootSystem::<f64>::explicit(&[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert!(par.is_ok(), "rescaled duplicates collapse after normalization");
        assert!(matches!(
            RootSystem::<f64>::explicit(&[vec![1.0, 0.0, 0.0, 0.0]]),
            Err(DunklError::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn roots_are_normalized_and_closed() {
        let rs = RootSystem::<f64>::dihedral(5).unwrap();
        for r in rs.roots() {
            close(dot(r, r), 2.0, 1e-14);
        }
        for a in rs.roots() {
            for b in rs.roots() {
                assert!(rs.find_root(&reflect(a, b).unwrap()).is_some());
            }
        }
        for r in rs.positive_roots() {
            assert!(dot(r, rs.generic_vector()) > 0.0);
        }
    }

    #[test]
    fn weight_examples() {
        let ctx = WeightContext::z2(&[1.0, 1.0]).unwrap();
        close(ctx.weight(&[1.0, 2.0]), 4.0, 1e-15);
        close(ctx.weight(&[2.0, 2.0]), 16.0, 1e-15);
        assert_eq!(ctx.weight(&[0.0, 0.0]), 0.0);
        assert_eq!(ctx.gamma(), 2.0);
    }

    #[test]
    fn mehta_examples() {
        close(WeightContext::rank_one(1.0).unwrap().mehta(), 2.0 / PI.sqrt(), 1e-13);
        close(WeightContext::z2(&[1.0, 1.0]).unwrap().mehta(), 4.0 / PI, 1e-13);
        close(WeightContext::rank_one(0.5).unwrap().mehta(), 1.0, 1e-13);
        let ctx = WeightContext::z2(&[1.0, 1.0]).unwrap();
        close(ctx.gaussian_mass_cartesian(40).unwrap(), PI / 4.0, 1e-12);
    }

    #[test]
    fn sphere_mass_examples() {
        close(WeightContext::z2(&[1.0, 1.0]).unwrap().sphere_mass(), PI / 4.0, 1e-12);
        close(WeightContext::z2(&[0.5, 0.5]).unwrap().sphere_mass(), 2.0, 1e-12);
        close(WeightContext::rank_one(0.37).unwrap().sphere_mass(), 2.0, 1e-15);
    }

    #[test]
    fn dk_identity_across_groups() {
        let ctxs = vec![
            WeightContext::z2(&[0.3, 1.7]).unwrap(),
            WeightContext::z2(&[0.5, 0.25, 1.5]).unwrap(),
            WeightContext::rank_one(2.2).unwrap(),
            WeightContext::dihedral(3, &[0.4]).unwrap(),
            WeightContext::dihedral(5, &[1.3]).unwrap(),
            WeightContext::dihedral(4, &[0.7]).unwrap(),
            WeightContext::new(
                RootSystem::z2_power(2).unwrap(),
                Multiplicity::per_orbit(vec![0.6, 0.9]).unwrap(),
                WeightConvention::RootNormalized,
            )
            .unwrap(),
        ];
        for c in ctxs {
            assert_eq!(c.mehta_source(), MehtaSource::ClosedForm);
            let d = c.dim() as f64;
            let lhs = c.sphere_mass() * c.mehta() * gamma_unchecked(c.gamma() + d / 2.0);
            close(lhs, 2.0, 1e-10);
        }
    }

    #[test]
    fn polar_matches_cartesian_gaussian_mass() {
        let g = crate::field::catalog::gaussian(1.0);
        for alphas in [[1.0, 1.0], [0.35, 1.2]] {
            let ctx = WeightContext::z2(&alphas).unwrap();
            let polar = ctx.polar_integrate(&g, &QuadOptions::default()).unwrap();
            close(polar, ctx.gaussian_mass_cartesian(48).unwrap(), 1e-10);
            close(polar * ctx.mehta(), 1.0, 1e-10);
        }
        let ctx = WeightContext::rank_one(1.0).unwrap();
        close(
            ctx.polar_integrate(&g, &QuadOptions::default()).unwrap(),
            PI.sqrt() / 2.0,
            1e-12,
        );
        // non-radial integrand takes the spherical route
        let ng = crate::field::ScalarField::new("g", |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let ctx = WeightContext::z2(&[1.0, 1.0]).unwrap();
        close(ctx.polar_integrate(&ng, &QuadOptions::default()).unwrap(), PI / 4.0, 1e-10);
        let zero = crate::field::catalog::constant(0.0).with_support(1.0);
        assert_eq!(ctx.polar_integrate(&zero, &QuadOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn truncation_guard() {
        let ctx = WeightContext::rank_one(1.0).unwrap();
        let slow = crate::field::catalog::gaussian(0.01);
        assert!(matches!(
            ctx.polar_integrate(&slow, &QuadOptions::default()),
            Err(DunklError::Accuracy { .. })
        ));
    }

    #[test]
    fn dihedral_mehta_matches_polar_quadrature() {
        // the closed form against c_k rebuilt from the directly computed d_k
        for (m, k) in [(3, 0.4), (6, 1.0), (5, 0.75)] {
            let c = WeightContext::<f64>::dihedral(m, &[k]).unwrap();
            let from_dk = 2.0 / (c.sphere_mass() * gamma_unchecked(c.gamma() + 1.0));
            close(c.mehta(), from_dk, 1e-10);
        }
        let c = WeightContext::<f64>::dihedral(4, &[0.3, 0.8]).unwrap();
        assert_eq!(c.mehta_source(), MehtaSource::PolarQuadrature);
        assert_eq!(c.gamma(), 2.0 * 0.3 + 2.0 * 0.8);
    }

    #[test]
    fn multiplicity_invariance_check() {
        let rs = RootSystem::<f64>::dihedral(3).unwrap();
        assert!(Multiplicity::per_positive_root(&rs, &[0.5, 0.5, 0.5]).is_ok());
        assert!(Multiplicity::per_positive_root(&rs, &[0.5, 0.6, 0.5]).is_err());
        assert!(Multiplicity::<f64>::per_orbit(vec![-1.0]).is_err());
    }

    #[test]
    fn config_parsing() {
        assert_eq!(GroupSpec::parse("Z2^3").unwrap(), GroupSpec::Z2Power(3));
        assert_eq!(GroupSpec::parse("dihedral(4)").unwrap(), GroupSpec::Dihedral(4));
        assert_eq!(
            GroupSpec::parse("roots:1,0;0,1").unwrap(),
            GroupSpec::Explicit(vec![vec![1.0, 0.0], vec![0.0, 1.0]])
        );
        assert!(GroupSpec::parse("e8").is_err());
        let cfg: ContextConfig = serde_json::from_str(r#"{"group":"Z2^2","multiplicities":[1.0,1.0],"d":2}"#).unwrap();
        let ctx = WeightContext::<f64>::from_config(&cfg).unwrap();
        close(ctx.mehta(), 4.0 / PI, 1e-13);
        let cfg = ContextConfig {
            group: "roots:1,0;0,1".into(),
            multiplicities: vec![1.0, 1.0],
            d: Some(3),
            convention: None,
        };
        assert!(WeightContext::<f64>::from_config(&cfg).is_err());
    }

    #[test]
    fn f32_context() {
        let c = WeightContext::<f32>::z2(&[1.0, 1.0]).unwrap();
        assert!((c.sphere_mass() - std::f32::consts::FRAC_PI_4).abs() < 1e-5);
        assert!((c.mehta() - 4.0 / std::f32::consts::PI).abs() < 1e-5);
    }
}
