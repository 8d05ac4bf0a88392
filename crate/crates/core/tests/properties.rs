use dunkl_core::applications::{spherical_mean_rank1, spherical_mean_vk, translate_rank1};
use dunkl_core::field::catalog;
use dunkl_core::intertwine::vk_apply;
use dunkl_core::kernel::{dunkl_kernel_product, dunkl_kernel_real, KernelDensity};
use dunkl_core::specfun::{gauss_jacobi_rule, QuadOptions};
use dunkl_core::Context;
use num_complex::Complex;
use proptest::prelude::*;

fn alphas(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.3f64..3.0, d)
}

fn vector(d: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, d)
}

fn ctx_and_points(max_d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1..=max_d).prop_flat_map(|d| (alphas(d), vector(d, -3.0, 3.0), vector(d, -3.0, 3.0)))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn mixed(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn imaginary_kernel_is_bounded((a, x, y) in ctx_and_points(3)) {
        let ctx = Context::z2(&a).unwrap();
        let ix: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(0.0, v)).collect();
        let z: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let k = dunkl_kernel_product(&ctx, &ix, &z).unwrap();
        prop_assert!(k.norm() <= 1.0 + 1e-10, "|K| = {}", k.norm());
    }

    #[test]
    fn kernel_symmetry_and_homogeneity((a, x, y) in ctx_and_points(3), lam in -2.0f64..2.0) {
        let ctx = Context::z2(&a).unwrap();
        let kxy = dunkl_kernel_real(&ctx, &x, &y).unwrap();
        prop_assert!(rel(kxy, dunkl_kernel_real(&ctx, &y, &x).unwrap()) < 1e-12);
        let lx: Vec<f64> = x.iter().map(|v| v * lam).collect();
        let ly: Vec<f64> = y.iter().map(|v| v * lam).collect();
        let l = dunkl_kernel_real(&ctx, &lx, &y).unwrap();
        let r = dunkl_kernel_real(&ctx, &x, &ly).unwrap();
        prop_assert!(rel(l, r) < 1e-12, "{l} vs {r}");
    }

    #[test]
    fn weight_invariance_and_homogeneity((a, x, _y) in ctx_and_points(3), r in 0.1f64..4.0) {
        let ctx = Context::z2(&a).unwrap();
        let w = ctx.weight(&x);
        for g in ctx.system().group() {
            prop_assert!(rel(ctx.weight(&g.apply(&x)), w) < 1e-13);
        }
        let rx: Vec<f64> = x.iter().map(|v| v * r).collect();
        prop_assert!(rel(ctx.weight(&rx), r.powf(2.0 * ctx.gamma()) * w) < 1e-12);
    }

    #[test]
    fn dihedral_weight_invariance(k in 0.2f64..2.5, m in 3usize..7, x in vector(2, -2.0, 2.0)) {
        let ctx = Context::dihedral(m, &[k]).unwrap();
        let w = ctx.weight(&x);
        for g in ctx.system().group() {
            prop_assert!(rel(ctx.weight(&g.apply(&x)), w) < 1e-11);
        }
    }

    #[test]
    fn density_equivariance(
        (a, x, t) in (1usize..=3).prop_flat_map(|d| (alphas(d), vector(d, 0.2, 2.0), vector(d, -0.95, 0.95))),
        r in 0.2f64..3.0,
    ) {
        let ctx = Context::z2(&a).unwrap();
        let kd = KernelDensity::new(&ctx).unwrap();
        let y: Vec<f64> = x.iter().zip(&t).map(|(v, s)| v * s).collect();
        let base = kd.density(&x, &y).unwrap();
        for w in ctx.system().group() {
            let l = kd.density(&w.apply(&x), &y).unwrap();
            let rr = kd.density(&x, &w.apply(&y)).unwrap();
            prop_assert!(mixed(l, rr) < 1e-12);
        }
        let rx: Vec<f64> = x.iter().map(|v| v * r).collect();
        let ry: Vec<f64> = y.iter().map(|v| v * r).collect();
        let scaled = kd.density(&rx, &ry).unwrap();
        prop_assert!(rel(scaled, r.powi(-(x.len() as i32)) * base) < 1e-12);
    }

    #[test]
    fn jacobi_rule_moment_ratios(n in 2usize..40, a in -0.9f64..3.0, b in -0.9f64..3.0) {
        // ∫(1+t)^{m+1} w / ∫(1+t)^m w = 2(b+m+1)/(a+b+m+2)
        let rule = gauss_jacobi_rule::<f64>(n, a, b).unwrap();
        let moment = |m: i32| rule.integrate(|p| (1.0 + p[0]).powi(m));
        for m in 0..(2 * n as i32 - 1) {
            let want = 2.0 * (b + m as f64 + 1.0) / (a + b + m as f64 + 2.0);
            prop_assert!(rel(moment(m + 1) / moment(m), want) < 1e-10, "n={n} m={m}");
        }
    }

    #[test]
    fn vk_fixes_the_origin((a, _x, z) in ctx_and_points(3)) {
        let ctx = Context::z2(&a).unwrap();
        let g = catalog::cosine(z.clone());
        let o = vec![0.0; z.len()];
        prop_assert_eq!(vk_apply(&ctx, &g, &o, &QuadOptions::default()).unwrap(), 1.0);
        let e = catalog::exponential(z);
        prop_assert_eq!(vk_apply(&ctx, &e, &o, &QuadOptions::default()).unwrap(), 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rank1_translation_triple(g in 0.2f64..3.0, x in -2.0f64..2.0, y in -2.0f64..2.0, which in 0usize..3) {
        let o = QuadOptions::default();
        let f = match which {
            0 => catalog::gaussian(1.0),
            1 => catalog::cosine(vec![1.3]),
            _ => catalog::monomial(vec![3]),
        };
        let one = catalog::constant(1.0);
        prop_assert!(mixed(translate_rank1(g, &f, x, 0.0, &o).unwrap(), f.eval(&[x])) < 1e-7);
        let xy = translate_rank1(g, &f, x, y, &o).unwrap();
        let yx = translate_rank1(g, &f, y, x, &o).unwrap();
        prop_assert!(mixed(xy, yx) < 1e-7, "{xy} vs {yx}");
        prop_assert!(mixed(translate_rank1(g, &one, x, y, &o).unwrap(), 1.0) < 1e-7);
    }

    #[test]
    fn rank1_spherical_mean_of_even_monomials(g in 0.3f64..3.0, x in 0.2f64..2.0, p in 0u32..4) {
        let h = catalog::monomial(vec![2 * p]);
        let (l, r) = spherical_mean_rank1(g, &h, x, &QuadOptions::default()).unwrap();
        prop_assert!(mixed(l, r) < 1e-9, "{l} vs {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn planar_spherical_mean_of_monomials(a in alphas(2), p in vector(2, 0.0, 4.99), t in 0.5f64..2.0) {
        let ctx = Context::z2(&a).unwrap();
        let h = catalog::monomial(p.iter().map(|v| *v as u32).collect());
        let (l, r) = spherical_mean_vk(&ctx, &h, t, &QuadOptions::default()).unwrap();
        prop_assert!(mixed(l, r) < 1e-6, "{l} vs {r}");
    }
}

#[test]
fn single_precision_kernel_tracks_double() {
    let c64 = Context::z2(&[1.0, 1.5]).unwrap();
    let c32 = dunkl_core::Context32::z2(&[1.0, 1.5]).unwrap();
    let (x, z) = ([0.7, -1.2], [1.1, 0.4]);
    let k64 = dunkl_kernel_real(&c64, &x, &z).unwrap();
    let k32 = dunkl_kernel_real(&c32, &[0.7f32, -1.2], &[1.1f32, 0.4]).unwrap();
    assert!(((k32 as f64) - k64).abs() / k64 < 1e-5);
    let v32 = vk_apply(&c32, &catalog::identity(), &[0.8f32, 0.3], &QuadOptions::default()).unwrap();
    let v64 = vk_apply(&c64, &catalog::identity(), &[0.8, 0.3], &QuadOptions::default()).unwrap();
    assert!(((v32 as f64) - v64).abs() < 1e-5);
}
