mod common;

use common::*;
use dswkb::potential::{MeromorphicPotential, Region, SpectralProblem, Strip};
use dswkb::{Cplx, Error};
use proptest::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

#[test]
fn evaluation_examples() {
    let p = problem("1/z", c(0.0, 0.0), 0.6);
    assert!((p.eval(c(0.5, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
    let p = problem("cot(pi*z)", c(0.0, 0.0), 0.4);
    assert!((p.eval(c(0.25, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    let p = problem("1/z + 0.3*z", c(0.0, 0.0), 1.5);
    assert!((p.eval(c(0.0, 1.0)).unwrap() - c(0.0, -0.7)).norm() < 1e-15);
}

#[test]
fn evaluation_errors() {
    let p = reference_problem();
    assert!(matches!(p.eval(c(0.0, 0.0)), Err(Error::PoleHit { .. })));
    assert!(matches!(p.eval(c(0.0, 1e-13)), Err(Error::PoleHit { .. })));
    assert!(matches!(p.eval(c(0.4, 0.0)), Err(Error::OutsideStrip { .. })));
}

#[test]
fn parameters_and_complex_coefficients() {
    let mut params = HashMap::new();
    params.insert("lambda".to_string(), c(0.7, 0.0));
    let v = MeromorphicPotential::<f64>::parse("lambda*cot(pi*z) + (1+2i)*z^2 - 3", &params).unwrap();
    let z = c(0.1, 0.05);
    let expect = c(0.7, 0.0) * (z * PI).cos() / (z * PI).sin() + c(1.0, 2.0) * z * z - 3.0;
    assert!((v.eval(z) - expect).norm() < 1e-12 * expect.norm());
    assert!((v.residue() - c(0.7 / PI, 0.0)).norm() < 1e-15);
    assert!(MeromorphicPotential::<f64>::parse("z^2", &HashMap::new()).is_err());
    assert!(MeromorphicPotential::<f64>::parse("1/z + mu*z", &HashMap::new()).is_err());
}

#[test]
fn poles_of_the_analytic_part_must_avoid_the_strip() {
    let v = MeromorphicPotential::<f64>::parse("1/z + 1/(z-0.2)", &HashMap::new()).unwrap();
    assert!(SpectralProblem::new(v.clone(), c(0.0, 0.0), Strip::new(0.35, 0.35).unwrap()).is_err());
    assert!(SpectralProblem::new(v, c(0.0, 0.0), Strip::new(0.15, 0.15).unwrap()).is_ok());
}

#[test]
fn laurent_examples() {
    let (r, cs) = reference_problem().laurent(5).unwrap();
    assert_eq!(r, c(1.0, 0.0));
    assert!((cs[0]).norm() < 1e-15 && (cs[1] - c(0.3, 0.0)).norm() < 1e-15 && cs[2].norm() < 1e-15);

    let (r, cs) = problem("2/z", c(1.0, 0.0), 0.3).laurent(3).unwrap();
    assert_eq!(r, c(2.0, 0.0));
    assert!((cs[0] - c(-1.0, 0.0)).norm() < 1e-15);

    // central differences of cot(πz) - 1/(πz) at 0
    let (r, cs) = problem("cot(pi*z)", c(0.0, 0.0), 0.4).laurent(4).unwrap();
    assert!((r - c(1.0 / PI, 0.0)).norm() < 1e-15);
    let g = |x: f64| (PI * x).cos() / (PI * x).sin() - 1.0 / (PI * x);
    let e = 1e-3;
    let slope = (8.0 * (g(e) - g(-e)) - (g(2.0 * e) - g(-2.0 * e))) / (12.0 * e);
    assert!((slope + PI / 3.0).abs() < 1e-8);
    assert!((cs[1] - c(slope, 0.0)).norm() < 1e-8);
    assert!(problem("1/z", c(0.0, 0.0), 0.3).laurent(17).is_err());
}

#[test]
fn laurent_remainder_shrinks_at_the_expected_order() {
    let p = problem("cot(pi*z) + 0.2*z^3 - 1/(z-2)", c(0.3, -0.1), 0.4);
    let order = 4;
    let (r, cs) = p.laurent(order).unwrap();
    let rem = |z: Cplx| {
        let series: Cplx = cs.iter().enumerate().map(|(k, ck)| ck * z.powi(k as i32)).sum();
        (p.eval(z).unwrap() - (r / z + series)).norm()
    };
    let dir = c(0.6, 0.8);
    let (a, b) = (rem(dir * 0.08), rem(dir * 0.04));
    let ratio = a / b;
    let expected = 2f64.powi(order as i32 + 1);
    assert!((ratio / expected - 1.0).abs() < 0.15, "{ratio}");
}

#[test]
fn turning_point_examples() {
    let p = problem("1/z", c(0.0, 0.0), 1.0);
    let mut tp = p.turning_points(&Region::square(1.0), 12).unwrap();
    tp.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    assert_eq!(tp.len(), 2);
    assert!((tp[0] - c(-0.5, 0.0)).norm() < 1e-10 && (tp[1] - c(0.5, 0.0)).norm() < 1e-10);
    let disk = Region::Disk { center: c(0.0, 0.0), radius: 0.4 };
    assert!(p.turning_points(&disk, 12).unwrap().is_empty());

    let p = problem("1/z + 0.3*z", c(0.0, 0.0), 1.0);
    let oracle = (2.0 - (4.0f64 - 1.2).sqrt()) / 0.6;
    let tp = p.turning_points(&Region::square(1.0), 12).unwrap();
    assert!(tp.iter().any(|z| (z - c(oracle, 0.0)).norm() < 1e-10));
    for z in &tp {
        let w = p.eval(*z).unwrap();
        assert!((w - 2.0).norm().min((w + 2.0).norm()) < 1e-10);
    }
}

#[test]
fn turning_points_stable_under_seed_doubling() {
    let p = problem("1/z + 0.3*z + 0.5i", c(0.2, 0.0), 1.0);
    let region = Region::square(0.95);
    let a = p.turning_points(&region, 10).unwrap();
    let b = p.turning_points(&region, 20).unwrap();
    assert_eq!(a.len(), b.len());
    for z in &a {
        assert!(b.iter().any(|y| (y - z).norm() < 1e-8));
    }
}

#[test]
fn regularity_examples() {
    let r = problem("1/z", c(0.0, 0.0), 0.4).verify_regular().unwrap();
    assert!(r.regular && r.turning_points.is_empty() && r.im_p_margin > 0.0);
    let v = MeromorphicPotential::<f64>::parse("1/z", &HashMap::new()).unwrap();
    let p = SpectralProblem::new(v, c(0.0, 0.0), Strip::new(0.6, 0.35).unwrap()).unwrap();
    let r = p.verify_regular().unwrap();
    assert!(!r.regular && !r.turning_points.is_empty());
    assert!(reference_problem().verify_regular().unwrap().regular);
}

fn strip_point() -> impl Strategy<Value = Cplx> {
    (-0.34f64..0.34, -0.34f64..0.34)
        .prop_filter("away from the pole", |(x, y)| x * x + y * y > 1e-6)
        .prop_map(|(x, y)| c(x, y))
}

type ClosedForm = Box<dyn Fn(Cplx) -> Cplx>;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn catalog_matches_closed_forms(z in strip_point()) {
        let cases: [(&str, ClosedForm); 4] = [
            ("1/z + 0.3*z", Box::new(|z: Cplx| 1.0 / z + 0.3 * z)),
            ("cot(pi*z)", Box::new(|z: Cplx| (PI * z).cos() / (PI * z).sin())),
            ("0.5/z - 2*z^2 + 1/(z+0.9)", Box::new(|z: Cplx| 0.5 / z - 2.0 * z * z + 1.0 / (z + 0.9))),
            ("(2-1i)/z + 0.3*cot(pi*z) + 4", Box::new(|z: Cplx| c(2.0, -1.0) / z + 0.3 * (PI * z).cos() / (PI * z).sin() + 4.0)),
        ];
        for (expr, f) in cases.iter() {
            let v = MeromorphicPotential::<f64>::parse(expr, &HashMap::new()).unwrap();
            let exact = f(z);
            prop_assert!((v.eval(z) - exact).norm() <= 1e-12 * exact.norm().max(1.0), "{expr} at {z}");
        }
    }
}
