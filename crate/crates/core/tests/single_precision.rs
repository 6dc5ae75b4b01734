use dswkb::lattice::{propagate, LatticeLine};
use dswkb::momentum::branch_at;
use dswkb::potential::ConstantCoefficient;
use dswkb::specfun::gamma;
use dswkb::LogValue;
use num_complex::Complex32;

#[test]
fn core_runs_in_single_precision() {
    let g = gamma(Complex32::new(5.0, 0.0)).unwrap();
    assert!((g.re - 24.0).abs() < 1e-4);

    let b = branch_at(ConstantCoefficient(Complex32::new(5.0, 0.0)), Complex32::new(0.0, 0.1)).unwrap();
    let p = b.base_value();
    assert!((2.0 * p.cos() + 5.0).norm() < 1e-5);

    let h = 0.01f32;
    let exact = |z: Complex32| (Complex32::i() * p * z / h).exp();
    let line = LatticeLine::new(Complex32::new(0.0, 0.0), h, 0, 50).unwrap();
    let seeds = (LogValue::from_complex(exact(line.point(0))), LogValue::from_complex(exact(line.point(1))));
    let sol = propagate(&ConstantCoefficient(Complex32::new(5.0, 0.0)), &line, 0, seeds, "closed form").unwrap();
    assert!(sol.value(50).unwrap().rel_diff(LogValue::from_complex(exact(line.point(50)))) < 1e-3);
}
