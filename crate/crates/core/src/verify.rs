//! Named verification suites and their CSV/JSON reports.
//!
//! Every suite runs on one f64 context; sampled checks draw from a ChaCha8
//! stream seeded by the configured seed and the suite name, so reports are
//! byte-for-byte reproducible.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::applications::{
    decay_scan, envelope_ratio, spherical_mean_rank1, spherical_mean_vk, strictly_decreasing, translate_radial, translate_rank1,
};
use crate::density::{ratio_series_mu, ratio_series_nu, spherical_density_average, BallRatioSeries, RADIUS_SCHEDULE};
use crate::error::{DunklError, Result};
use crate::field::catalog::{self, gaussian, gaussian_cutoff, gaussian_profile};
use crate::field::{RadialProfile, ScalarField};
use crate::intertwine::{duality_pair, tvk_apply, tvk_gaussian_reference, tvk_radial, vk_apply};
use crate::kernel::{dunkl_kernel_product, dunkl_kernel_real, kernel_via_laplace, KernelDensity};
use crate::operators::dunkl_apply;
use crate::rootsys::WeightContext;
use crate::specfun::{cached_jacobi, gamma, QuadOptions, TanhSinh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Constants,
    Kernel,
    Duality,
    Density,
    Spherical,
    Translate,
    Decay,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Constants,
        Suite::Kernel,
        Suite::Duality,
        Suite::Density,
        Suite::Spherical,
        Suite::Translate,
        Suite::Decay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Constants => "constants",
            Suite::Kernel => "kernel",
            Suite::Duality => "duality",
            Suite::Density => "density",
            Suite::Spherical => "spherical",
            Suite::Translate => "translate",
            Suite::Decay => "decay",
            Suite::All => "all",
        }
    }

    fn seed_tag(self) -> u64 {
        self.name()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = DunklError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Suite::EACH
            .iter()
            .chain([Suite::All].iter())
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| DunklError::contract(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Check {
    /// |lhs - rhs| ≤ tol |rhs|
    Rel,
    /// |lhs - rhs| ≤ tol
    Abs,
    /// |lhs - rhs| ≤ tol (1 + |rhs|)
    Mixed,
    /// lhs ≤ rhs + tol
    AtMost,
    /// Precomputed outcome.
    Flag(bool),
}

/// One verified identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub suite: String,
    pub check_id: String,
    pub identity: String,
    #[serde(serialize_with = "sig12")]
    pub lhs: f64,
    #[serde(serialize_with = "sig12")]
    pub rhs: f64,
    #[serde(serialize_with = "sig12")]
    pub abs_err: f64,
    #[serde(serialize_with = "sig12")]
    pub rel_err: f64,
    #[serde(serialize_with = "sig12")]
    pub tol: f64,
    pub pass: bool,
    #[serde(skip)]
    check: Check,
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn sig12<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let r = round12(*v);
    if r.is_finite() {
        s.serialize_f64(r)
    } else {
        s.serialize_none()
    }
}

impl Row {
    fn build(
        suite: Suite,
        id: impl Into<String>,
        identity: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tol: f64,
        check: Check,
    ) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = if rhs != 0.0 { abs_err / rhs.abs() } else { abs_err };
        let mut row = Row {
            suite: suite.name().into(),
            check_id: id.into(),
            identity: identity.into(),
            lhs,
            rhs,
            abs_err,
            rel_err,
            tol,
            pass: false,
            check,
        };
        row.pass = row.evaluate();
        row
    }

    fn evaluate(&self) -> bool {
        let e = self.abs_err;
        match self.check {
            Check::Rel => e <= self.tol * self.rhs.abs(),
            Check::Abs => e <= self.tol,
            Check::Mixed => e <= self.tol * (1.0 + self.rhs.abs()),
            Check::AtMost => self.lhs <= self.rhs + self.tol,
            Check::Flag(p) => p && self.lhs.is_finite(),
        }
    }

    fn with_tol(mut self, tol: f64) -> Self {
        if !matches!(self.check, Check::Flag(_)) {
            self.tol = tol;
            self.pass = self.evaluate();
        }
        self
    }
}

/// Rows in check order plus rendering.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "suite", "check_id", "identity", "lhs", "rhs", "abs_err", "rel_err", "tol", "pass",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.suite.clone(),
                r.check_id.clone(),
                r.identity.clone(),
                fmt12(r.lhs),
                fmt12(r.rhs),
                fmt12(r.abs_err),
                fmt12(r.rel_err),
                fmt12(r.tol),
                r.pass.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| DunklError::contract(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| DunklError::contract(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.rows).map_err(|e| DunklError::contract(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> DunklError {
    DunklError::contract(format!("csv: {e}"))
}

/// 12 significant digits: plain decimal for 1e-5 ≤ |v| < 1e15, scientific otherwise.
pub fn fmt12(v: f64) -> String {
    let r = round12(v);
    if r == 0.0 || !r.is_finite() || (1e-5..1e15).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

/// Context and knobs for a verification run.
#[derive(Clone)]
pub struct VerifyConfig {
    pub ctx: WeightContext<f64>,
    pub opts: QuadOptions,
    /// Replaces the tolerance of every equality row when set.
    pub tol: Option<f64>,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn new(ctx: WeightContext<f64>) -> Self {
        Self {
            ctx,
            opts: QuadOptions::default(),
            tol: None,
            seed: 0,
        }
    }
}

/// Whether a suite can run on the configured context.
pub fn supports(suite: Suite, ctx: &WeightContext<f64>) -> Result<()> {
    let d = ctx.dim();
    let product = ctx.require_product().is_ok();
    let need_product = |what: &str| -> Result<()> {
        if product {
            Ok(())
        } else {
            Err(DunklError::UnsupportedGroup(format!("{what} needs a ℤ₂^d context")))
        }
    };
    let need_positive = || -> Result<()> {
        if ctx.k_positive().iter().all(|&k| k > 0.0) {
            Ok(())
        } else {
            Err(DunklError::contract("this suite needs every multiplicity > 0"))
        }
    };
    if d > 3 {
        return Err(DunklError::UnsupportedDimension(d));
    }
    match suite {
        Suite::Constants | Suite::All => Ok(()),
        Suite::Kernel => need_product("kernel suite"),
        Suite::Duality => {
            need_product("duality suite")?;
            need_positive()?;
            if d > 2 {
                return Err(DunklError::UnsupportedDimension(d));
            }
            Ok(())
        }
        Suite::Density => {
            need_product("density suite")?;
            need_positive()?;
            if d > 2 {
                return Err(DunklError::UnsupportedDimension(d));
            }
            Ok(())
        }
        Suite::Spherical | Suite::Translate | Suite::Decay => {
            need_product(suite.name())?;
            need_positive()
        }
    }
}

/// Runs one suite, or every applicable suite for `Suite::All`.
pub fn run(suite: Suite, cfg: &VerifyConfig) -> Result<Report> {
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::EACH
            .iter()
            .copied()
            .filter(|&s| supports(s, &cfg.ctx).is_ok())
            .collect()
    } else {
        supports(suite, &cfg.ctx)?;
        vec![suite]
    };
    let mut rows = Vec::new();
    for s in suites {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ s.seed_tag());
        let cx = Cx { cfg, rng: &mut rng };
        let part = match s {
            Suite::Constants => constants(cx),
            Suite::Kernel => kernel(cx),
            Suite::Duality => duality(cx),
            Suite::Density => density(cx),
            Suite::Spherical => spherical(cx),
            Suite::Translate => translate(cx),
            Suite::Decay => decay(cx),
            Suite::All => unreachable!("expanded above"),
        }?;
        rows.extend(part);
    }
    if let Some(t) = cfg.tol {
        rows = rows.into_iter().map(|r| r.with_tol(t)).collect();
    }
    Ok(Report { rows })
}

struct Cx<'a> {
    cfg: &'a VerifyConfig,
    rng: &'a mut ChaCha8Rng,
}

impl Cx<'_> {
    fn ctx(&self) -> &WeightContext<f64> {
        &self.cfg.ctx
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// Point with every coordinate at least `floor` away from 0.
    fn regular_point(&mut self, d: usize, floor: f64, hi: f64) -> Vec<f64> {
        (0..d)
            .map(|_| {
                let m = self.uniform(floor, hi);
                if self.rng.gen_bool(0.5) {
                    m
                } else {
                    -m
                }
            })
            .collect()
    }
}

/// The (lhs, rhs) pair with the largest error in the sense of `check`.
fn worst(pairs: &[(f64, f64)], check: Check) -> (f64, f64) {
    let score = |&(l, r): &(f64, f64)| {
        let e = (l - r).abs();
        let s = match check {
            Check::Rel => e / r.abs(),
            Check::Mixed => e / (1.0 + r.abs()),
            _ => e,
        };
        if s.is_nan() {
            f64::INFINITY
        } else {
            s
        }
    };
    pairs
        .iter()
        .copied()
        .max_by(|a, b| score(a).total_cmp(&score(b)))
        .unwrap_or((f64::NAN, f64::NAN))
}

fn worst_row(suite: Suite, id: &str, identity: &str, pairs: &[(f64, f64)], tol: f64, check: Check) -> Row {
    let (l, r) = worst(pairs, check);
    Row::build(suite, id, format!("{identity} (worst of {})", pairs.len()), l, r, tol, check)
}

fn mehta_oracle(ctx: &WeightContext<f64>) -> Result<f64> {
    Ok(1.0 / ctx.gaussian_mass_cartesian(96)?)
}

/// ∫_{S^{d-1}} ω dσ with tanh–sinh panels between the walls.
fn sphere_mass_oracle(ctx: &WeightContext<f64>) -> Option<f64> {
    let tau = std::f64::consts::TAU;
    match ctx.dim() {
        1 => Some(ctx.weight(&[1.0]) + ctx.weight(&[-1.0])),
        2 => {
            let mut cuts = vec![0.0, tau];
            for r in ctx.system().positive_roots() {
                let base = r[1].atan2(r[0]) + std::f64::consts::FRAC_PI_2;
                for shift in [0.0, std::f64::consts::PI] {
                    cuts.push((base + shift).rem_euclid(tau));
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let ts = TanhSinh::<f64>::new(8);
            Some(
                cuts.windows(2)
                    .map(|w| ts.integrate(w[0], w[1], |th| ctx.weight(&[th.cos(), th.sin()])))
                    .sum(),
            )
        }
        3 if ctx.system().is_axis_aligned() => {
            let h = std::f64::consts::FRAC_PI_2;
            let ts = TanhSinh::<f64>::new(6);
            let v = ts.integrate(0.0, h, |th| {
                let (s, c) = th.sin_cos();
                s * ts.integrate(0.0, h, |ph| ctx.weight(&[s * ph.cos(), s * ph.sin(), c]))
            });
            Some(8.0 * v)
        }
        _ => None,
    }
}

fn constants(cx: Cx<'_>) -> Result<Vec<Row>> {
    let s = Suite::Constants;
    let ctx = cx.ctx().clone();
    let d = ctx.dim();
    let mut rows = Vec::new();
    let (ck, dk, g) = (ctx.mehta(), ctx.sphere_mass(), ctx.gamma());
    if ctx.axis_alphas().is_some() {
        rows.push(Row::build(
            s,
            "ck.cartesian",
            "c_k⁻¹ = ∫ e^{-‖x‖²} ω_k dx",
            ck,
            mehta_oracle(&ctx)?,
            1e-8,
            Check::Rel,
        ));
    }
    if let Some(v) = sphere_mass_oracle(&ctx) {
        rows.push(Row::build(s, "dk.panels", "d_k = ∫_S ω_k dσ", dk, v, 1e-8, Check::Rel));
    }
    let half_d = 0.5 * d as f64;
    rows.push(Row::build(
        s,
        "dk.ck.identity",
        "d_k c_k Γ(γ+d/2) = 2",
        dk * ck * gamma(g + half_d)?,
        2.0,
        1e-8,
        Check::Rel,
    ));
    let mut inv = Vec::new();
    let mut hom = Vec::new();
    for _ in 0..20 {
        let x: Vec<f64> = (0..d).map(|_| cx.rng.gen_range(-2.0..2.0)).collect();
        let wx = ctx.weight(&x);
        for w in ctx.system().group() {
            inv.push((ctx.weight(&w.apply(&x)), wx));
        }
        let r = cx.rng.gen_range(0.01..4.0);
        let rx: Vec<f64> = x.iter().map(|v| v * r).collect();
        hom.push((ctx.weight(&rx), r.powf(2.0 * g) * wx));
    }
    rows.push(worst_row(
        s,
        "weight.invariance",
        "ω_k(wx) = ω_k(x)",
        &inv,
        1e-12,
        Check::Mixed,
    ));
    rows.push(worst_row(
        s,
        "weight.homogeneity",
        "ω_k(rx) = r^{2γ} ω_k(x)",
        &hom,
        1e-12,
        Check::Rel,
    ));
    if ctx.axis_alphas().is_some() {
        let polar = ctx.polar_integrate(&gaussian(1.0), &cx.cfg.opts)?;
        let cart = ctx.gaussian_mass_cartesian(96)?;
        rows.push(Row::build(
            s,
            "polar.cartesian",
            "polar and Cartesian ∫ e^{-‖x‖²} ω_k dx agree",
            polar,
            cart,
            1e-8,
            Check::Rel,
        ));
    }
    Ok(rows)
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Unit vector with nonzero coordinates.
fn generic_direction(d: usize, phase: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|l| 1.0 + 0.37 * (l as f64 + phase).sin()).collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

fn cplx(v: &[f64]) -> Vec<Complex<f64>> {
    v.iter().map(|&a| Complex::new(a, 0.0)).collect()
}

fn kernel(mut cx: Cx<'_>) -> Result<Vec<Row>> {
    let s = Suite::Kernel;
    let ctx = cx.ctx().clone();
    let d = ctx.dim();
    let opts = cx.cfg.opts;
    let mut rows = Vec::new();
    let (u, v) = (generic_direction(d, 0.0), generic_direction(d, 1.3));
    // offset radii so that x stays regular
    let xs: Vec<f64> = (0..9).map(|i| -2.0 + 4.0 * (i as f64 + 0.25) / 9.0).collect();
    let zs = grid(-2.0, 2.0, 9);
    let mut lap = Vec::new();
    let mut vke = Vec::new();
    for &a in &xs {
        let x: Vec<f64> = u.iter().map(|c| c * a).collect();
        for &b in &zs {
            let z: Vec<f64> = v.iter().map(|c| c * b).collect();
            let closed = dunkl_kernel_real(&ctx, &x, &z)?;
            lap.push((kernel_via_laplace(&ctx, &x, &cplx(&z))?.re, closed));
            let e = catalog::exponential(z.clone());
            vke.push((vk_apply(&ctx, &e, &x, &opts)?, closed));
        }
    }
    rows.push(worst_row(
        s,
        "laplace.grid",
        "K(x,z) = ∫ e^{⟨y,z⟩} 𝒦(x,y) dy on a 9×9 grid",
        &lap,
        1e-8,
        Check::Rel,
    ));
    rows.push(worst_row(
        s,
        "vk.exponential",
        "V_k(e^{⟨·,z⟩})(x) = K(x,z) on a 9×9 grid",
        &vke,
        1e-8,
        Check::Abs,
    ));
    let mut bound = 0.0f64;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..d).map(|_| cx.rng.gen_range(-5.0..5.0) / (d as f64).sqrt()).collect();
        let y: Vec<f64> = (0..d).map(|_| cx.rng.gen_range(-5.0..5.0) / (d as f64).sqrt()).collect();
        let ix: Vec<Complex<f64>> = x.iter().map(|&a| Complex::new(0.0, a)).collect();
        bound = bound.max(dunkl_kernel_product(&ctx, &ix, &cplx(&y))?.norm());
    }
    rows.push(Row::build(
        s,
        "bound.imaginary",
        "max |K(ix,y)| ≤ 1 over 1000 samples",
        bound,
        1.0,
        1e-10,
        Check::AtMost,
    ));
    let mut sym = Vec::new();
    let mut scale = Vec::new();
    for _ in 0..50 {
        let x: Vec<Complex<f64>> = (0..d)
            .map(|_| Complex::new(cx.uniform(-2.0, 2.0), cx.uniform(-2.0, 2.0)))
            .collect();
        let z: Vec<Complex<f64>> = (0..d)
            .map(|_| Complex::new(cx.uniform(-2.0, 2.0), cx.uniform(-2.0, 2.0)))
            .collect();
        let lam = Complex::new(cx.uniform(-1.5, 1.5), cx.uniform(-1.5, 1.5));
        let kxz = dunkl_kernel_product(&ctx, &x, &z)?;
        let kzx = dunkl_kernel_product(&ctx, &z, &x)?;
        sym.push(((kxz - kzx).norm(), kxz.norm()));
        let lx: Vec<Complex<f64>> = x.iter().map(|&a| a * lam).collect();
        let lz: Vec<Complex<f64>> = z.iter().map(|&a| a * lam).collect();
        let a = dunkl_kernel_product(&ctx, &lx, &z)?;
        let b = dunkl_kernel_product(&ctx, &x, &lz)?;
        scale.push(((a - b).norm(), b.norm()));
    }
    let rel = |v: &[(f64, f64)]| v.iter().map(|&(e, n)| e / n).fold(0.0f64, f64::max);
    rows.push(Row::build(
        s,
        "symmetry",
        "K(x,z) = K(z,x), relative defect",
        rel(&sym),
        0.0,
        1e-10,
        Check::Abs,
    ));
    rows.push(Row::build(
        s,
        "homogeneity",
        "K(λx,z) = K(x,λz), relative defect",
        rel(&scale),
        0.0,
        1e-10,
        Check::Abs,
    ));
    let zero = vec![0.0; d];
    let y0: Vec<f64> = v.iter().map(|c| 1.7 * c).collect();
    rows.push(Row::build(
        s,
        "initial",
        "K(0,y) = 1",
        dunkl_kernel_real(&ctx, &zero, &y0)?,
        1.0,
        0.0,
        Check::Abs,
    ));
    let y: Vec<f64> = (0..d).map(|l| if l % 2 == 0 { 0.5 } else { 0.2 }).collect();
    let (c2, y2) = (ctx.clone(), y.clone());
    let kf = ScalarField::new("K(·,y)", move |x: &[f64]| dunkl_kernel_real(&c2, x, &y2).unwrap_or(f64::NAN));
    let mut eig = Vec::new();
    for &a in &[-1.0, -0.4, 0.6, 1.2, 1.9] {
        let x: Vec<f64> = u.iter().enumerate().map(|(l, c)| c * a * (1.0 + 0.2 * l as f64)).collect();
        let kv = dunkl_kernel_real(&ctx, &x, &y)?;
        for (j, &yj) in y.iter().enumerate() {
            eig.push((dunkl_apply(&ctx, j, &kf, &x)?, yj * kv));
        }
    }
    rows.push(worst_row(s, "eigen", "T_j K(·,y)(x) = y_j K(x,y)", &eig, 1e-6, Check::Mixed));
    let x1: Vec<f64> = u.iter().map(|c| 1.3 * c).collect();
    rows.push(Row::build(
        s,
        "vk.one",
        "V_k(1) = 1",
        vk_apply(&ctx, &catalog::constant(1.0), &x1, &opts)?,
        1.0,
        0.0,
        Check::Abs,
    ));
    let alphas = ctx.require_product()?.to_vec();
    let mut lin = Vec::new();
    for (j, &a) in alphas.iter().enumerate() {
        let mut p = vec![0u32; d];
        p[j] = 1;
        lin.push((vk_apply(&ctx, &catalog::monomial(p), &x1, &opts)?, x1[j] / (2.0 * a + 1.0)));
    }
    rows.push(worst_row(
        s,
        "vk.linear",
        "V_k(y_j)(x) = x_j/(2α_j+1)",
        &lin,
        1e-10,
        Check::Mixed,
    ));
    let mut contr = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..d).map(|_| cx.uniform(-2.0, 2.0)).collect();
        let f: Vec<f64> = (0..d).map(|_| cx.uniform(-3.0, 3.0)).collect();
        contr = contr.max(vk_apply(&ctx, &catalog::cosine(f), &x, &opts)?.abs());
    }
    rows.push(Row::build(
        s,
        "vk.contraction",
        "|V_k(cos⟨·,ξ⟩)| ≤ 1",
        contr,
        1.0,
        1e-12,
        Check::AtMost,
    ));
    Ok(rows)
}

fn duality(cx: Cx<'_>) -> Result<Vec<Row>> {
    let s = Suite::Duality;
    let ctx = cx.ctx().clone();
    let d = ctx.dim();
    let opts = cx.cfg.opts;
    let mut rows = Vec::new();
    let fs = [catalog::bump(1.5), catalog::bump(2.0)];
    let gs = [
        gaussian(1.0),
        gaussian(0.5),
        catalog::cosine(generic_direction(d, 0.4)),
        catalog::constant(1.0),
        catalog::exponential(generic_direction(d, 2.1).iter().map(|v| 0.5 * v).collect()),
    ];
    // both sides already agree to ~1e-11 at 32 nodes per half-axis
    let pair_opts = QuadOptions {
        order: opts.order.min(32),
        ..opts
    };
    let mut pairs = Vec::new();
    for f in &fs {
        for g in &gs {
            pairs.push(duality_pair(&ctx, f, g, &pair_opts)?);
        }
    }
    rows.push(worst_row(
        s,
        "duality.pairs",
        "∫ ᵗV_k(f) g dy = ∫ V_k(g) f ω_k dx",
        &pairs,
        1e-7,
        Check::Rel,
    ));
    let mut gauss = Vec::new();
    for &a in &[0.5, 1.0, 2.0] {
        for &b in &[0.0, 0.4, 1.1] {
            let y: Vec<f64> = generic_direction(d, 0.8).iter().map(|c| c * b).collect();
            let got = tvk_apply(&ctx, &gaussian(a).with_support(gaussian_cutoff(a)), &y, &opts)?;
            gauss.push((got, tvk_gaussian_reference(&ctx, a, &y)?));
        }
    }
    rows.push(worst_row(
        s,
        "gaussian",
        "ᵗV_k(e^{-a‖·‖²}) closed form",
        &gauss,
        1e-6,
        Check::Rel,
    ));
    if d >= 2 {
        let profiles: Vec<RadialProfile<f64>> = vec![
            gaussian_profile(0.7).with_support(gaussian_cutoff(0.7)),
            gaussian_profile(1.0).with_support(gaussian_cutoff(1.0)),
            gaussian_profile(2.0).with_support(gaussian_cutoff(2.0)),
            catalog::bump_profile(1.5),
            catalog::bump_profile(2.5),
        ];
        let y: Vec<f64> = generic_direction(d, 0.2).iter().map(|c| 0.6 * c).collect();
        let mut rad = Vec::new();
        for p in profiles {
            let direct = tvk_apply(&ctx, &ScalarField::radial(p.clone()), &y, &opts)?;
            rad.push((tvk_radial(&ctx, &p, &y, &opts)?, direct));
        }
        rows.push(worst_row(s, "radial", "radial ᵗV_k formula = ᵗV_k", &rad, 1e-6, Check::Rel));
    }
    Ok(rows)
}

/// (x, y) pairs well inside supp 𝒦°(·, y).
fn density_pairs(d: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    match d {
        1 => vec![(vec![1.0], vec![0.5]), (vec![0.8], vec![-0.3]), (vec![-1.2], vec![0.4])],
        _ => vec![
            (vec![1.0, 1.0], vec![0.3, 0.3]),
            (vec![1.0, -0.8], vec![0.5, 0.2]),
            (vec![-1.2, 0.9], vec![-0.4, 0.5]),
        ],
    }
}

/// Relative errors below this are round-off; a series already there has converged.
const RATIO_NOISE: f64 = 1e-12;

fn convergence_ok(series: &BallRatioSeries<f64>, target: f64) -> (f64, f64, bool) {
    let errs: Vec<f64> = series
        .ratios
        .iter()
        .map(|r| ((r - target).abs() / target.abs()).max(RATIO_NOISE))
        .collect();
    let ups = errs.windows(2).filter(|w| w[1] > w[0]).count();
    let (first, last) = (errs[0], errs[errs.len() - 1]);
    (last, first, ups <= 1 && (last < first || last == RATIO_NOISE))
}

fn density(mut cx: Cx<'_>) -> Result<Vec<Row>> {
    let s = Suite::Density;
    let ctx = cx.ctx().clone();
    let d = ctx.dim();
    let alphas = ctx.require_product()?.to_vec();
    let kd = KernelDensity::new(&ctx)?;
    let mut rows = Vec::new();
    // ∫ 𝒦(x, y) dy with a Gauss–Jacobi rule in y carrying the endpoint factors
    let n = 40;
    let rules: Vec<_> = alphas
        .iter()
        .map(|&a| cached_jacobi::<f64>(n, a - 1.0, a))
        .collect::<Result<_>>()?;
    let mut norm = Vec::new();
    for _ in 0..20 {
        let x = cx.regular_point(d, 0.2, 2.0);
        let mut idx = vec![0usize; d];
        let mut y = vec![0.0; d];
        let mut acc = 0.0;
        'outer: loop {
            let mut w = 1.0;
            for l in 0..d {
                let (t, ax, a) = (rules[l].x(idx[l]), x[l].abs(), alphas[l]);
                y[l] = x[l] * t;
                // y = xt, dy = |x| dt; the rule carries (1-t)^{a-1}(1+t)^a
                w *= rules[l].weights()[idx[l]] * ax / ((1.0 - t).powf(a - 1.0) * (1.0 + t).powf(a));
            }
            acc += w * kd.density(&x, &y)?;
            for l in 0..d {
                idx[l] += 1;
                if idx[l] < n {
                    continue 'outer;
                }
                idx[l] = 0;
            }
            break;
        }
        norm.push((acc, 1.0));
    }
    rows.push(worst_row(s, "normalization", "∫ 𝒦(x,y) dy = 1", &norm, 1e-9, Check::Rel));
    let mut refl = Vec::new();
    let mut dil = Vec::new();
    for _ in 0..20 {
        let x = cx.regular_point(d, 0.2, 2.0);
        let t: Vec<f64> = (0..d).map(|_| cx.uniform(-0.95, 0.95)).collect();
        let y: Vec<f64> = x.iter().zip(&t).map(|(v, s)| v * s).collect();
        for w in ctx.system().group() {
            refl.push((kd.density(&w.apply(&x), &y)?, kd.density(&x, &w.apply(&y))?));
        }
        // ry/r = y stays inside the support box of 𝒦(x, ·)
        let r = cx.uniform(0.2, 3.0);
        let rx: Vec<f64> = x.iter().map(|v| v * r).collect();
        let ry: Vec<f64> = y.iter().map(|v| v * r).collect();
        dil.push((kd.density(&rx, &ry)?, r.powi(-(d as i32)) * kd.density(&x, &y)?));
    }
    rows.push(worst_row(
        s,
        "equivariance.reflection",
        "𝒦(wx,y) = 𝒦(x,wy)",
        &refl,
        1e-12,
        Check::Mixed,
    ));
    rows.push(worst_row(
        s,
        "equivariance.dilation",
        "𝒦(rx,y) = r^{-d} 𝒦(x,y/r)",
        &dil,
        1e-12,
        Check::Rel,
    ));
    for (i, (x, y)) in density_pairs(d).into_iter().enumerate() {
        let target = kd.weighted(&x, &y)?;
        let nu = ratio_series_nu(&ctx, &y, &x, &RADIUS_SCHEDULE)?;
        let mu = ratio_series_mu(&ctx, &x, &y, &RADIUS_SCHEDULE)?;
        for (route, ser) in [("nu", &nu), ("mu", &mu)] {
            rows.push(Row::build(
                s,
                format!("ratio.{route}.{i}"),
                format!("ball ratio at r = 1/256 → 𝒦°(x,y) via {route}"),
                ser.limit_estimate,
                target,
                0.02,
                Check::Rel,
            ));
            let (last, first, ok) = convergence_ok(ser, target);
            rows.push(Row::build(
                s,
                format!("ratio.{route}.{i}.converging"),
                "relative error, finest vs coarsest radius, decreasing",
                last,
                first,
                0.0,
                Check::Flag(ok),
            ));
            let mono = ser.sup_ratios.windows(2).all(|w| w[0] >= w[1]);
            rows.push(Row::build(
                s,
                format!("ratio.{route}.{i}.sup_monotone"),
                "sup-sequence nonincreasing",
                ser.sup_ratios[ser.sup_ratios.len() - 1],
                ser.sup_ratios[0],
                0.0,
                Check::Flag(mono),
            ));
        }
    }
    if d == 2 {
        let mut avg = Vec::new();
        for (t, y) in [(2.0, vec![1.0, 0.5]), (1.5, vec![0.3, -0.4]), (1.0, vec![0.0, 0.0])] {
            let a = spherical_density_average(&ctx, t, &y)?;
            avg.push((a.integral, a.rhs));
        }
        rows.push(worst_row(
            s,
            "spherical.average",
            "∫_S 𝒦(tβ,y) ω_k(β) dσ = C t^{2-2γ-d}(t²-‖y‖²)^{γ-1}",
            &avg,
            1e-4,
            Check::Rel,
        ));
    }
    Ok(rows)
}

fn spherical(mut cx: Cx<'_>) -> Result<Vec<Row>> {
    let s = Suite::Spherical;
    let ctx = cx.ctx().clone();
    let d = ctx.dim();
    let opts = cx.cfg.opts;
    let g = ctx.gamma();
    let mut rows = Vec::new();
    if d >= 2 {
        let dk = ctx.sphere_mass();
        let (l, r) = spherical_mean_vk(&ctx, &catalog::constant(1.0), 1.3, &opts)?;
        rows.push(Row::build(
            s,
            "vk.one.lhs",
            "∫_S V_k(1)(tξ) ω_k dσ = d_k",
            l,
            dk,
            1e-9,
            Check::Abs,
        ));
        rows.push(Row::build(
            s,
            "vk.one.rhs",
            "ball side for h ≡ 1 = d_k",
            r,
            dk,
            1e-9,
            Check::Abs,
        ));
        let mut poly = Vec::new();
        for _ in 0..10 {
            let p: Vec<u32> = (0..d)
                .map(|_| cx.rng.gen_range(0..3u32) * 2 + cx.rng.gen_range(0..2u32))
                .collect();
            let t = cx.uniform(0.5, 2.0);
            poly.push(spherical_mean_vk(&ctx, &catalog::monomial(p), t, &opts)?);
        }
        rows.push(worst_row(
            s,
            "vk.polynomial",
            "spherical mean of V_k(h) = weighted ball mean of h",
            &poly,
            1e-6,
            Check::Mixed,
        ));
        let (l, r) = spherical_mean_vk(&ctx, &gaussian(1.0), 2.0, &opts)?;
        rows.push(Row::build(
            s,
            "vk.gaussian",
            "spherical mean identity, h = e^{-‖y‖²}, t = 2",
            l,
            r,
            1e-5,
            Check::Rel,
        ));
    }
    let (l, r) = spherical_mean_rank1(g, &catalog::constant(1.0), 1.0, &opts)?;
    rows.push(Row::build(
        s,
        "rank1.one.lhs",
        "(V_k(1)(x)+V_k(1)(-x))/2 = 1",
        l,
        1.0,
        1e-9,
        Check::Abs,
    ));
    rows.push(Row::build(
        s,
        "rank1.one.rhs",
        "rank-one ball side for h ≡ 1",
        r,
        1.0,
        1e-9,
        Check::Abs,
    ));
    let (l, r) = spherical_mean_rank1(g, &catalog::identity(), 1.4, &opts)?;
    rows.push(Row::build(s, "rank1.odd", "odd h averages to 0", l, r, 1e-12, Check::Abs));
    let want = 1.0 / (2.0 * g + 1.0);
    let (l, r) = spherical_mean_rank1(g, &catalog::monomial(vec![2]), 1.0, &opts)?;
    rows.push(Row::build(
        s,
        "rank1.square.lhs",
        "parity mean of V_k(y²) at x = 1 is 1/(2γ+1)",
        l,
        want,
        1e-9,
        Check::Abs,
    ));
    rows.push(Row::build(
        s,
        "rank1.square.rhs",
        "rank-one ball side for y², x = 1",
        r,
        want,
        1e-9,
        Check::Abs,
    ));
    Ok(rows)
}

fn rank1_function(i: usize) -> ScalarField<f64> {
    match i % 4 {
        0 => gaussian(1.0),
        1 => catalog::cosine(vec![1.3]),
        2 => catalog::exponential(vec![0.7]),
        _ => catalog::monomial(vec![3]),
    }
}

fn translate(mut cx: Cx<'_>) -> Result<Vec<Row>> {
    let s = Suite::Translate;
    let ctx = cx.ctx().clone();
    let d = ctx.dim();
    let opts = cx.cfg.opts;
    let g = if d == 1 { ctx.gamma() } else { ctx.require_product()?[0] };
    let mut rows = Vec::new();
    let (mut origin, mut sym, mut unit) = (Vec::new(), Vec::new(), Vec::new());
    let one = catalog::constant(1.0);
    for i in 0..20 {
        let f = rank1_function(i);
        let (x, y) = (cx.uniform(-2.0, 2.0), cx.uniform(-2.0, 2.0));
        origin.push((translate_rank1(g, &f, x, 0.0, &opts)?, f.eval(&[x])));
        sym.push((translate_rank1(g, &f, x, y, &opts)?, translate_rank1(g, &f, y, x, &opts)?));
        unit.push((translate_rank1(g, &one, x, y, &opts)?, 1.0));
    }
    rows.push(worst_row(s, "rank1.origin", "τ_x f(0) = f(x)", &origin, 1e-7, Check::Mixed));
    rows.push(worst_row(
        s,
        "rank1.symmetry",
        "τ_x f(y) = τ_y f(x)",
        &sym,
        1e-7,
        Check::Mixed,
    ));
    rows.push(worst_row(s, "rank1.unit", "τ_x(1) = 1", &unit, 1e-7, Check::Abs));
    let mut even = Vec::new();
    let rctx = WeightContext::<f64>::rank_one(g)?;
    for _ in 0..5 {
        let (x, y) = (cx.uniform(-2.0, 2.0), cx.uniform(-2.0, 2.0));
        let h = ScalarField::new("F(√(x²+y²+2x·))", move |u: &[f64]| {
            (-(x * x + y * y + 2.0 * x * u[0]).max(0.0)).exp()
        });
        even.push((
            translate_rank1(g, &gaussian(1.0), x, y, &opts)?,
            vk_apply(&rctx, &h, &[y], &opts)?,
        ));
    }
    rows.push(worst_row(
        s,
        "rank1.vk_form",
        "τ_x f(y) = V_k[F(√(x²+y²+2x·))](y) for even f",
        &even,
        1e-7,
        Check::Mixed,
    ));
    if d >= 2 {
        let (mut origin, mut sym, mut unit) = (Vec::new(), Vec::new(), Vec::new());
        let ones = RadialProfile::new("1", |_: f64| 1.0);
        let zero = vec![0.0; d];
        for i in 0..20 {
            let p = if i % 2 == 0 {
                gaussian_profile(1.0)
            } else {
                gaussian_profile(0.4)
            };
            let x = cx.regular_point(d, 0.1, 1.5);
            let y = cx.regular_point(d, 0.1, 1.5);
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            origin.push((translate_radial(&ctx, &p, &x, &zero, &opts)?, p.eval(nx)));
            sym.push((
                translate_radial(&ctx, &p, &x, &y, &opts)?,
                translate_radial(&ctx, &p, &y, &x, &opts)?,
            ));
            unit.push((translate_radial(&ctx, &ones, &x, &y, &opts)?, 1.0));
        }
        rows.push(worst_row(
            s,
            "radial.origin",
            "τ_x f(0) = f(x), radial f",
            &origin,
            1e-7,
            Check::Mixed,
        ));
        rows.push(worst_row(
            s,
            "radial.symmetry",
            "τ_x f(y) = τ_y f(x), radial f",
            &sym,
            1e-7,
            Check::Mixed,
        ));
        rows.push(worst_row(
            s,
            "radial.unit",
            "τ_x(1) = 1 against 𝒦(y,η)",
            &unit,
            1e-7,
            Check::Abs,
        ));
        let alphas = ctx.require_product()?.to_vec();
        let x = cx.regular_point(d, 0.1, 1.5);
        let y = cx.regular_point(d, 0.1, 1.5);
        let mut prod = 1.0;
        for l in 0..d {
            prod *= translate_rank1(alphas[l], &gaussian(1.0), x[l], y[l], &opts)?;
        }
        let got = translate_radial(&ctx, &gaussian_profile(1.0), &x, &y, &opts)?;
        rows.push(Row::build(
            s,
            "radial.gaussian_factor",
            "radial τ of e^{-‖·‖²} = ∏ rank-one τ",
            got,
            prod,
            1e-10,
            Check::Mixed,
        ));
    }
    Ok(rows)
}

fn decay(cx: Cx<'_>) -> Result<Vec<Row>> {
    let s = Suite::Decay;
    let ctx = cx.ctx().clone();
    let d = ctx.dim();
    let radii = [10.0, 20.0, 40.0, 80.0];
    let x: Vec<f64> = (0..d).map(|l| 1.0 - 0.3 * l as f64 / d as f64).collect();
    let scan = decay_scan(&ctx, &x, &radii, 64)?;
    let mut rows = Vec::new();
    for (id, label, vals) in [
        ("kernel.weighted", "ω_k(x)|K(-ix,z)|", scan.weighted_kernel()),
        ("kernel.unweighted", "|K(-ix,z)|", scan.kernel.clone()),
        ("bessel.weighted", "ω_k(x)|J_W(-ix,z)|", scan.weighted_bessel()),
        ("bessel.unweighted", "|J_W(-ix,z)|", scan.bessel.clone()),
    ] {
        let ratio = envelope_ratio(&vals);
        let ok = strictly_decreasing(&vals) && ratio < 0.25;
        rows.push(Row::build(
            s,
            id,
            format!("shell max of {label}, R = 10..80: strictly decreasing, last/first < 0.25"),
            ratio,
            0.25,
            0.0,
            Check::Flag(ok),
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alphas: &[f64]) -> VerifyConfig {
        VerifyConfig::new(WeightContext::z2(alphas).unwrap())
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("ALL".parse::<Suite>().unwrap(), Suite::All);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn constants_pass_on_z2_squared() {
        let r = run(Suite::Constants, &cfg(&[1.0, 1.0])).unwrap();
        assert!(r.all_pass(), "{:#?}", r.failures().collect::<Vec<_>>());
        let ck = r.rows.iter().find(|row| row.check_id == "ck.cartesian").unwrap();
        assert!((ck.lhs - 4.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn constants_on_dihedral() {
        let c = VerifyConfig::new(WeightContext::dihedral(3, &[0.8]).unwrap());
        let r = run(Suite::Constants, &c).unwrap();
        assert!(r.all_pass(), "{:#?}", r.failures().collect::<Vec<_>>());
        assert!(matches!(run(Suite::Kernel, &c), Err(DunklError::UnsupportedGroup(_))));
        let all = run(Suite::All, &c).unwrap();
        assert!(all.rows.iter().all(|row| row.suite == "constants"));
    }

    #[test]
    fn rank_one_suites_pass() {
        let c = cfg(&[1.0]);
        for s in [
            Suite::Kernel,
            Suite::Spherical,
            Suite::Translate,
            Suite::Decay,
            Suite::Density,
        ] {
            let r = run(s, &c).unwrap();
            assert!(r.all_pass(), "{s}: {:#?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn tolerance_override_and_rendering() {
        let mut c = cfg(&[1.0, 1.0]);
        c.tol = Some(0.0);
        let r = run(Suite::Constants, &c).unwrap();
        assert!(r.rows.iter().all(|row| row.tol == 0.0));
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("suite,check_id,identity,lhs,rhs,abs_err,rel_err,tol,pass\n"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json.as_array().unwrap().len(), r.rows.len());
        assert_eq!(fmt12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt12(-1.234567890123456e-9), "-1.23456789012e-9");
        assert_eq!(round12(std::f64::consts::PI), "3.14159265359".parse::<f64>().unwrap());
    }

    #[test]
    fn zero_multiplicity_rejected_for_density() {
        let c = cfg(&[0.0, 1.0]);
        assert!(matches!(run(Suite::Density, &c), Err(DunklError::Contract(_))));
    }
}
