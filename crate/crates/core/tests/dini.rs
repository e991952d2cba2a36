use bgk::dini::{self, DiniConfig, DiniVerdict};
use bgk::geometry::{Ball, StarDomain};
use bgk::potential::ScalarField;
use bgk::Point;

fn unit_disk() -> StarDomain {
    let o = Point::zeros(2);
    StarDomain::ball(o, 1.0, Ball::new(o, 0.5).unwrap()).unwrap()
}

#[test]
fn lipschitz_modulus_is_linear() {
    let d = unit_disk();
    let f = ScalarField::new("x1", |x: &Point| x[0]);
    let cfg = DiniConfig { n_pairs: 100_000, ..DiniConfig::default() };
    let rhos = dini::default_rhos(d.diameter(), &cfg);
    let est = dini::modulus(&f, &d, &rhos, cfg.n_pairs, 1).unwrap();
    for (r, w) in est.rhos.iter().zip(&est.omegas) {
        assert!(*w <= *r * (1.0 + 1e-12), "{r} {w}");
        assert!(*w >= 0.95 * r, "{r} {w}");
    }
    assert_eq!(dini::verdict(&est), DiniVerdict::Dini);
}

#[test]
fn holder_half_exponent() {
    let d = unit_disk();
    let f = ScalarField::new("sqrt|x|", |x: &Point| x.norm().sqrt());
    let cfg = DiniConfig { n_pairs: 20_000, ..DiniConfig::default() };
    let rep = dini::analyze(&f, &d, &cfg).unwrap();
    let a = rep.local_exponent.unwrap();
    assert!((a - 0.5).abs() < 0.1, "{a}");
    assert_eq!(rep.verdict, DiniVerdict::Dini);
}

#[test]
fn logarithmic_modulus_is_flagged() {
    let d = unit_disk();
    let e = std::f64::consts::E;
    let f = ScalarField::new("1/log(e+1/|x|)", move |x: &Point| {
        let r = x.norm();
        if r == 0.0 {
            0.0
        } else {
            1.0 / (e + 1.0 / r).ln()
        }
    });
    let cfg = DiniConfig { n_pairs: 20_000, ..DiniConfig::default() };
    let rep = dini::analyze(&f, &d, &cfg).unwrap();
    assert_eq!(rep.verdict, DiniVerdict::PossiblyNonDini, "{:?}", rep.local_exponent);
    assert_eq!(rep.verdict.to_string(), "inconclusive/possibly non-Dini");
}

#[test]
fn cd_norm_of_linear_field() {
    let d = unit_disk();
    let f = ScalarField::new("x1", |x: &Point| x[0]);
    let cfg = DiniConfig { n_pairs: 20_000, ..DiniConfig::default() };
    let cd = dini::cd_norm(&f, &d, &cfg).unwrap();
    assert!(cd.max_abs > 0.98 && cd.max_abs <= 1.0);
    let exact = 2.0 - 2e-4;
    assert!(cd.dini.value <= exact * (1.0 + 1e-3) && cd.dini.value > 0.95 * exact, "{}", cd.dini.value);
}
