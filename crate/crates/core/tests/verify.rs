use bgk::geometry::{Ball, StarDomain};
use bgk::potential::{EpsilonSchedule, PotentialField, ScalarField};
use bgk::verify::{check_suite, convergence_study, mutation_suite, Level, Problem};
use bgk::Point;

fn disk() -> StarDomain {
    let o = Point::zeros(2);
    StarDomain::ball(o, 2.0, Ball::new(o, 1.0).unwrap()).unwrap()
}

fn manufactured() -> ScalarField {
    ScalarField::new("m", |x: &Point| -(4.0 - x.norm_sq()) * (x[0] * x[1].sin() + x[1] * x[0].cos()) / 4.0)
}

fn report(rs: &[bgk::verify::CheckReport]) -> String {
    rs.iter().map(|r| format!("{} {} {:e}\n", r.name, r.passed, r.measured)).collect()
}

#[test]
fn quick_suite_passes_on_manufactured_problem() {
    let p = Problem::new(PotentialField::for_domain(disk(), manufactured()).unwrap());
    let rs = check_suite(&p, Level::Quick);
    assert!(rs.iter().all(|r| r.passed), "{}", report(&rs));
    assert!(rs.windows(2).all(|w| w[0].name <= w[1].name));
    let div = rs.iter().find(|r| r.name == "divergence_residual").unwrap();
    assert!(div.measured <= 1e-2);
}

#[test]
fn zero_field_measures_zero() {
    let p = Problem::new(PotentialField::for_domain(disk(), ScalarField::zero()).unwrap());
    let rs = check_suite(&p, Level::Quick);
    assert!(rs.iter().all(|r| r.passed), "{}", report(&rs));
    for name in ["outside_vanishing", "divergence_residual", "boundary_continuity", "epsilon_convergence"] {
        assert_eq!(rs.iter().find(|r| r.name == name).unwrap().measured, 0.0, "{name}");
    }
}

#[test]
fn corrupted_kernel_is_caught() {
    let p = Problem::new(PotentialField::for_domain(disk(), manufactured()).unwrap());
    let rs = mutation_suite(&p, Level::Quick);
    for name in ["k_sphere_mean", "derivative_identity"] {
        assert!(!rs.iter().find(|r| r.name == name).unwrap().passed, "{}", report(&rs));
    }
}

#[test]
fn reports_are_reproducible() {
    let p = Problem::new(PotentialField::for_domain(disk(), manufactured()).unwrap());
    let a = serde_json::to_string(&check_suite(&p, Level::Quick)).unwrap();
    let b = serde_json::to_string(&check_suite(&p, Level::Quick)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn convergence_tables() {
    let pf = PotentialField::for_domain(disk(), ScalarField::constant(1.0)).unwrap();
    let probes = vec![Point::from_slice(&[0.3, 0.2]), Point::from_slice(&[1.99, 0.0])];
    let t = convergence_study(&pf, &EpsilonSchedule::default(), &probes).unwrap();
    assert!(t.monotone, "{:?}", t.max_residuals);
    assert_eq!(t.notes.len(), 1);
    assert!(t.residuals.iter().all(|r| r[1].is_none()));
    let one = convergence_study(&pf, &EpsilonSchedule::new(vec![0.01]).unwrap(), &probes[..1]).unwrap();
    assert_eq!(one.max_residuals.len(), 1);
    assert!(one.monotone);
}
