use bgk::bump::{psi_eval, Mollifier};
use bgk::decomposition::build_partition;
use bgk::dini::{cd_norm_from, default_rhos, modulus, DiniConfig};
use bgk::geometry::{Ball, Overlap, StarDomain, UnionDomain};
use bgk::kernel::KernelContext;
use bgk::potential::{PotentialField, ScalarField};
use bgk::Point;
use proptest::prelude::*;

fn p2(x: f64, y: f64) -> Point {
    Point::from_slice(&[x, y])
}

fn disk() -> StarDomain {
    let o = Point::zeros(2);
    StarDomain::ball(o, 2.0, Ball::new(o, 1.0).unwrap()).unwrap()
}

fn in_disk(r: f64) -> impl Strategy<Value = Point> {
    (0.0..r, 0.0..std::f64::consts::TAU).prop_map(|(s, t)| p2(s * t.cos(), s * t.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity(x in -2.0f64..2.0, y in -1.2f64..1.2) {
        let piece = |cx: f64| StarDomain::ball(p2(cx, 0.0), 1.2, Ball::new(p2(cx, 0.0), 0.6).unwrap()).unwrap();
        let u = UnionDomain::new(
            vec![piece(-0.8), piece(0.8)],
            vec![Overlap { i: 0, ball: Ball::new(p2(0.0, 0.0), 0.3).unwrap() }],
        ).unwrap();
        let part = build_partition(&u).unwrap();
        let q = p2(x, y);
        let chis = part.chis(&q);
        prop_assert!(chis.iter().all(|c| (0.0..=1.0).contains(c)));
        let s: f64 = chis.iter().sum();
        if u.inside(&q) {
            prop_assert!((s - 1.0).abs() < 1e-12);
        } else {
            prop_assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn k_is_invariant_under_dilation(x in in_disk(1.9), t in 0.0f64..std::f64::consts::TAU, s in 0.01f64..50.0) {
        let ctx = KernelContext::for_domain(disk()).unwrap();
        let z = p2(t.cos(), t.sin());
        let k1 = ctx.kernel_k(&x, &z).unwrap();
        let ks = ctx.kernel_k(&x, &(z * s)).unwrap();
        prop_assert!((ks - k1).max_abs() <= 1e-10 * k1.max_abs().max(1e-12));
    }

    #[test]
    fn kernel_forms_agree(x in in_disk(1.95), y in in_disk(1.95)) {
        prop_assume!(x.dist(&y) > 1e-6);
        let ctx = KernelContext::for_domain(disk()).unwrap();
        let a = ctx.kernel_n(&x, &y).unwrap();
        let scale = a.norm() + 1e-6 * ctx.kernel_bound_constant() / x.dist(&y);
        for b in [ctx.kernel_n_alpha(&x, &y).unwrap(), ctx.kernel_n_r(&x, &y).unwrap()] {
            prop_assert!((a - b).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn mollifier_vanishes_off_its_ball(cx in -1.0f64..1.0, r in 0.1f64..2.0, x in in_disk(4.0)) {
        let b = Ball::new(p2(cx, 0.3), r).unwrap();
        let m = Mollifier::new(b).unwrap();
        let v = psi_eval(&m, &x);
        prop_assert!(v >= 0.0 && v <= m.max_value() * (1.0 + 1e-12));
        if !b.contains(&x) {
            prop_assert_eq!(v, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn potential_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, x in in_disk(1.9)) {
        let f = ScalarField::new("x1", |y| y[0]);
        let g = ScalarField::new("sin x2", |y| y[1].sin());
        let h = ScalarField::combine(a, &f, b, &g);
        let v = |s: ScalarField| PotentialField::for_domain(disk(), s).unwrap().v_eval(&x).unwrap();
        let lhs = v(h);
        let rhs = v(f) * a + v(g) * b;
        prop_assert!((lhs - rhs).max_abs() <= 1e-10 * (a.abs() + b.abs() + 1.0));
    }

    #[test]
    fn modulus_is_monotone_and_scales(k in -3i32..4, seed in 0u64..1000) {
        let d = disk();
        let cfg = DiniConfig { per_decade: 4, n_pairs: 200, max_samples: 500, seed, ..Default::default() };
        let rhos = default_rhos(d.diameter(), &cfg);
        let f = ScalarField::new("sqrt|x|", |y| y.norm().sqrt());
        let c = 2f64.powi(k);
        let g = ScalarField::new("c sqrt|x|", move |y| c * y.norm().sqrt());
        let ef = modulus(&f, &d, &rhos, cfg.n_pairs, seed).unwrap();
        let eg = modulus(&g, &d, &rhos, cfg.n_pairs, seed).unwrap();
        prop_assert!(ef.omegas.windows(2).all(|w| w[0] <= w[1]));
        for (a, b) in ef.omegas.iter().zip(&eg.omegas) {
            prop_assert_eq!(a * c, *b);
        }
        let nf = cd_norm_from(&f, &d, &ef, &cfg).unwrap();
        let ng = cd_norm_from(&g, &d, &eg, &cfg).unwrap();
        prop_assert!((ng.value - c * nf.value).abs() <= 1e-12 * ng.value);
    }
}
