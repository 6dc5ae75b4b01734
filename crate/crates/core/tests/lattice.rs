mod common;

use common::*;
use dswkb::lattice::*;
use dswkb::potential::ConstantCoefficient;
use dswkb::specfun::ln_gamma_one_minus;
use dswkb::{Cplx, Log};
use proptest::prelude::*;

#[test]
fn constant_coefficient_over_two_hundred_steps() {
    let h = 0.01;
    let p = Cplx::new(std::f64::consts::PI, -(2.5f64 + 5.25f64.sqrt()).ln());
    let exact = |z: Cplx| (Cplx::i() * p * z / h).exp();
    let line = LatticeLine::new(c(0.0, 0.0), h, 0, 200).unwrap();
    let seeds = (Log::from_complex(exact(line.point(0))), Log::from_complex(exact(line.point(1))));
    let start = std::time::Instant::now();
    let sol = propagate(&ConstantCoefficient(c(5.0, 0.0)), &line, 0, seeds, "closed form").unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    for k in 0..=200 {
        let err = sol.value(k).unwrap().rel_diff(Log::from_complex(exact(line.point(k))));
        assert!(err < 1e-11, "{k}: {err}");
    }
    assert!(sol.residual(&ConstantCoefficient(c(5.0, 0.0))).unwrap() < 1e-12);
}

#[test]
fn constant_coefficient_seeds_are_the_closed_form() {
    let m = reference_model(0.01);
    let line = LatticeLine::new(c(-0.3, 0.05), 0.01, 0, 10).unwrap();
    let (a, b) = seed_wkb(&m, &line, 0).unwrap();
    assert!(a.ln_abs().is_finite() && b.ln_abs().is_finite() && !a.is_zero() && !b.is_zero());
    assert_eq!(solve_psi(&m, &line).unwrap().provenance().source, "wkb");
}

#[test]
fn pole_on_lattice_is_refused_outside_probe_mode() {
    let m = reference_model(0.01);
    let line = LatticeLine::new(c(0.0, 0.0), 0.01, -25, 5).unwrap();
    assert!(matches!(solve_psi(&m, &line), Err(dswkb::Error::PoleOnLattice { k: 0 })));
}

#[test]
fn growth_ratio_follows_the_gamma_law_recurrence() {
    let h = 0.005;
    let m = reference_model(h);
    let z = c(0.1025, 0.0);
    let line = psi_line_through(&m, z, 40).unwrap();
    let sol = solve_psi(&m, &line).unwrap();
    let law = |z: Cplx| ln_gamma_one_minus(z / h).unwrap() + m.g0(z).unwrap().log();
    for k in [10, 25, 39] {
        let (a, b) = (line.point(k), line.point(k + 1));
        let ratio = (sol.value(k + 1).unwrap() / sol.value(k).unwrap()).to_complex();
        let predicted = (law(b) - law(a)).exp();
        assert!((ratio / predicted - 1.0).norm() < 0.02, "{k}: {ratio} vs {predicted}");
    }
}

#[test]
fn basis_coefficients_are_constant_along_a_line() {
    let m = reference_model(0.01);
    let z = c(0.0, 0.07);
    let kl = steps_left(z, 0.01, m.seed_depth());
    let kr = steps_right(z, 0.01, m.seed_depth());
    let line = LatticeLine::new(z, 0.01, -kl - 1, kr + 1).unwrap();
    let psi = solve_psi(&m, &line).unwrap();
    let fp = solve_f_plus(&m, &line).unwrap();
    let fm = solve_f_minus(&m, &line).unwrap();
    let (a0, b0) = coefficients(&psi, &fp, &fm, -kl).unwrap();
    for k in [-10, 0, 10, kr - 1] {
        let (a, b) = coefficients(&psi, &fp, &fm, k).unwrap();
        assert!((a - a0).norm() < 1e-10 * a0.norm() && (b - b0).norm() < 1e-10 * a0.norm().max(b0.norm()));
    }
    // ψ is n₀ f₊ by construction
    assert!((a0 - m.ln_n0().exp()).norm() < 1e-10 * a0.norm() && b0.norm() < 1e-10 * a0.norm());
}

#[test]
fn basis_wronskian_tends_to_two_i() {
    let mut errs = Vec::new();
    for h in SWEEP {
        let m = reference_model(h);
        let mut worst: f64 = 0.0;
        for z in [c(0.0, 0.1), c(0.0, -0.1), c(0.5 * h, 0.0), c(-0.05, 0.05)] {
            let line = LatticeLine::new(z, h, -steps_left(z, h, m.seed_depth()) - 1, steps_right(z, h, m.seed_depth()) + 1).unwrap();
            let w = wronskian(&solve_f_plus(&m, &line).unwrap(), &solve_f_minus(&m, &line).unwrap(), 0).unwrap();
            worst = worst.max((w - c(0.0, 2.0)).norm());
        }
        errs.push(worst);
    }
    assert!(strictly_decreasing(&errs), "{errs:?}");
    assert!(errs[2] < 0.1);
}

#[test]
fn f_plus_poles_have_the_gamma_residues() {
    let mut errs = Vec::new();
    for h in SWEEP {
        let m = reference_model(h);
        let mut worst: f64 = 0.0;
        let mut factorial = 1.0;
        for n in 1..=3i64 {
            if n > 1 {
                factorial *= (n - 1) as f64;
            }
            let r = residue_probe(&m, ProbeTarget::FPlusPole, n).unwrap();
            assert!(r.simple && r.residual < 0.05, "{h} {n}: {r:?}");
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            let oracle = m.g0(c(n as f64 * h, 0.0)).unwrap().to_complex() * (-h * sign / factorial);
            worst = worst.max((r.extrapolated / oracle - 1.0).norm());
        }
        errs.push(worst);
    }
    assert!(strictly_decreasing(&errs), "{errs:?}");
}

#[test]
fn phi_poles_on_the_negative_lattice() {
    let h = 0.01;
    let m = reference_model(h);
    let mut factorial = 1.0;
    for n in 1..=3i64 {
        if n > 1 {
            factorial *= (n - 1) as f64;
        }
        let r = residue_probe(&m, ProbeTarget::PhiPole, n).unwrap();
        assert!(r.simple, "{n}: {r:?}");
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let oracle = m.g1(c(-(n as f64) * h, 0.0)).unwrap().to_complex() * (-m.ln_n1()).exp() * (h * sign / factorial);
        assert!((r.extrapolated / oracle - 1.0).norm() < 0.05, "{n}: {} vs {oracle}", r.extrapolated);
    }
}

#[test]
fn f_minus_zeros_match_the_asymptotic_slope() {
    let h = 0.01;
    let m = reference_model(h);
    for n in 0..=2i64 {
        let r = residue_probe(&m, ProbeTarget::FMinusZero, n).unwrap();
        assert!(r.simple, "{n}: {r:?}");
        let x = c(n as f64 * h, 0.0);
        let e = 1e-6 * h;
        let slope = (m.f_minus(x + e).unwrap().to_complex() - m.f_minus(x - e).unwrap().to_complex()) / (2.0 * e);
        assert!((r.extrapolated / slope - 1.0).norm() < 0.05, "{n}: {} vs {slope}", r.extrapolated);
    }
}

#[test]
fn probe_beyond_the_strip_is_rejected() {
    let m = reference_model(0.01);
    assert!(matches!(residue_probe(&m, ProbeTarget::FPlusPole, 36), Err(dswkb::Error::OutsideStrip { .. })));
}

fn seeds() -> impl Strategy<Value = (Cplx, Cplx)> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0)
        .prop_filter("nonzero", |(a, b, c, d)| a.hypot(*b) + c.hypot(*d) > 1e-3)
        .prop_map(|(a, b, c, d)| (Cplx::new(a, b), Cplx::new(c, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn linearity(s1 in seeds(), s2 in seeds(), al in seeds()) {
        let m = reference_model(0.02);
        let coef = m.problem().clone();
        let line = LatticeLine::new(c(-0.3, 0.13), 0.02, 0, 28).unwrap();
        let lv = Log::from_complex;
        let p1 = propagate(&coef, &line, 0, (lv(s1.0), lv(s1.1)), "a").unwrap();
        let p2 = propagate(&coef, &line, 0, (lv(s2.0), lv(s2.1)), "b").unwrap();
        let (a, b) = al;
        let comb = propagate(&coef, &line, 0, (lv(a * s1.0 + b * s2.0), lv(a * s1.1 + b * s2.1)), "c").unwrap();
        for k in 0..=28 {
            let parts = [a * p1.complex(k).unwrap(), b * p2.complex(k).unwrap()];
            let scale = parts[0].norm() + parts[1].norm();
            prop_assert!((comb.complex(k).unwrap() - parts[0] - parts[1]).norm() <= 1e-12 * scale.max(1e-300) * 50.0);
        }
    }

    #[test]
    fn wronskian_is_conserved(s1 in seeds(), s2 in seeds(), y in -0.3f64..0.3) {
        let coef = reference_problem();
        let line = LatticeLine::new(c(-0.305, y), 0.01, 0, 60).unwrap();
        let lv = Log::from_complex;
        let a = propagate(&coef, &line, 0, (lv(s1.0), lv(s1.1)), "a").unwrap();
        let b = propagate(&coef, &line, 0, (lv(s2.0), lv(s2.1)), "b").unwrap();
        let w0 = wronskian_log(&a, &b, 0).unwrap();
        prop_assume!(!w0.is_zero() && w0.to_complex().norm() > 1e-6);
        // roundoff grows with the size of the products that cancel
        for k in 1..60 {
            let wk = wronskian_log(&a, &b, k).unwrap();
            let size = (a.value(k + 1).unwrap() * b.value(k).unwrap()).ln_abs();
            let tol = 1e-12 * (size - w0.ln_abs()).exp().max(1.0);
            prop_assert!(wk.rel_diff(w0) < tol.max(1e-10), "{k}");
        }
    }

    #[test]
    fn recursion_residual(x in -0.3f64..0.3, y in -0.3f64..0.3) {
        prop_assume!(y.abs() > 1e-3);
        let m = reference_model(0.01);
        let z = c(x, y);
        let sol = solve_psi(&m, &psi_line_through(&m, z, 3).unwrap()).unwrap();
        prop_assert!(sol.residual(m.problem()).unwrap() < 1e-12);
    }
}
