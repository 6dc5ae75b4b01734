//! Acceptance criteria on the reference problem v(z) = 1/z + 0.3 z, E = 0,
//! d_x = d_y = 0.35, z0 = -0.25, z1 = 0.25, h in {0.02, 0.01, 0.005}.
//! Prints one PASS/FAIL line per criterion and exits nonzero on failure.

use std::process::ExitCode;
use std::time::Instant;

use dswkb::lattice::{propagate, residue_probe, LatticeLine, ProbeTarget};
use dswkb::potential::ConstantCoefficient;
use dswkb::{Cplx, Log, Model};
use dswkb_harness::config::SuiteName;
use dswkb_harness::suites::Outcome;
use dswkb_harness::{parse_config, run_suite, SweepConfig, REFERENCE_CONFIG};

const CONSTANT_TOL: f64 = 1e-11;
const CONSTANT_SECONDS: f64 = 1.0;
const UNIFORM_TOL: f64 = 0.10;
const UNIFORM_SECONDS_PER_H: f64 = 60.0;
const WRONSKIAN_TOL: f64 = 0.1;
const PROBE_TOL: f64 = 0.05;
const BRANCH_TOL: f64 = 1e-10;
const CONTOUR_TOL: f64 = 1e-8;
const G0_TILDE_TOL: f64 = 1e-9;
const SPECFUN_TOL: f64 = 1e-12;
const STIRLING_AT_10_TOL: f64 = 0.01;
const TOTAL_SECONDS: f64 = 600.0;

struct Tally {
    failed: usize,
}

impl Tally {
    fn report(&mut self, id: &str, title: &str, ok: bool, detail: String) {
        println!("{} {id}: {title} [{detail}]", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn metric(o: &Outcome, name: &str) -> f64 {
    o.metrics.iter().find(|m| m.name == name).map_or(f64::NAN, |m| m.value)
}

fn sweep(cfg: &SweepConfig, suite: SuiteName) -> Result<Vec<(Outcome, f64)>, dswkb::Error> {
    cfg.h_list
        .iter()
        .map(|&h| {
            let start = Instant::now();
            let o = run_suite(cfg, suite, h)?;
            Ok((o, start.elapsed().as_secs_f64()))
        })
        .collect()
}

fn criterion_1(t: &mut Tally) {
    let h = 0.01;
    let p = Cplx::new(std::f64::consts::PI, -(2.5f64 + 5.25f64.sqrt()).ln());
    let exact = |z: Cplx| Log::from_log(Cplx::i() * p * z / h);
    let start = Instant::now();
    let line = LatticeLine::new(Cplx::new(0.0, 0.0), h, 0, 200).unwrap();
    let sol = propagate(&ConstantCoefficient(Cplx::new(5.0, 0.0)), &line, 0, (exact(line.point(0)), exact(line.point(1))), "closed form");
    let elapsed = start.elapsed().as_secs_f64();
    let err = sol.map(|s| (0..=200).map(|k| s.value(k).unwrap().rel_diff(exact(line.point(k)))).fold(0.0, f64::max));
    match err {
        Ok(e) => t.report(
            "1",
            "constant w = 5 over 200 steps matches exp(ipz/h)",
            e < CONSTANT_TOL && elapsed < CONSTANT_SECONDS,
            format!("max rel err {e:.2e} < {CONSTANT_TOL:e}, {elapsed:.3}s < {CONSTANT_SECONDS}s"),
        ),
        Err(e) => t.report("1", "constant w = 5 over 200 steps", false, e.to_string()),
    }
}

fn criterion_5(t: &mut Tally, cfg: &SweepConfig) {
    let mut worst: f64 = 0.0;
    let mut all_simple = true;
    let mut failure = None;
    for &h in &cfg.h_list {
        let m = match Model::new(cfg.problem.clone(), h, cfg.z0, cfg.z1) {
            Ok(m) => m,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let probes = (1..=3).map(|n| (ProbeTarget::FPlusPole, n)).chain((0..=2).map(|n| (ProbeTarget::FMinusZero, n)));
        for (target, n) in probes {
            match residue_probe(&m, target, n) {
                Ok(r) => {
                    worst = worst.max(r.residual);
                    all_simple &= r.simple;
                }
                Err(e) => failure = Some(format!("{target:?} n={n} h={h}: {e}")),
            }
        }
    }
    match failure {
        Some(e) => t.report("5", "simple poles of f+ at h,2h,3h and zeros of f- at 0,h,2h", false, e),
        None => t.report(
            "5",
            "simple poles of f+ at h,2h,3h and zeros of f- at 0,h,2h",
            all_simple && worst < PROBE_TOL,
            format!("max extrapolation residual {worst:.2e} < {PROBE_TOL}, all simple: {all_simple}"),
        ),
    }
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut t = Tally { failed: 0 };
    let cfg = parse_config(REFERENCE_CONFIG).expect("reference config");
    println!("reference problem: v = {}, h = {:?}", cfg.potential, cfg.h_list);

    criterion_1(&mut t);

    match sweep(&cfg, SuiteName::UniformGamma) {
        Ok(rows) => {
            let errs: Vec<f64> = rows.iter().map(|(o, _)| o.primary.unwrap().max).collect();
            let slowest = rows.iter().map(|(_, s)| *s).fold(0.0, f64::max);
            let last = *errs.last().unwrap();
            t.report(
                "2",
                "uniform Gamma law ratio error over 50 points decreases in h",
                decreasing(&errs) && last < UNIFORM_TOL && slowest < UNIFORM_SECONDS_PER_H,
                format!("{} ; final < {UNIFORM_TOL}; slowest h {slowest:.2}s < {UNIFORM_SECONDS_PER_H}s", fmt(&errs)),
            );
        }
        Err(e) => t.report("2", "uniform Gamma law", false, e.to_string()),
    }

    match sweep(&cfg, SuiteName::ContinuationPrinciple) {
        Ok(rows) => {
            let errs: Vec<f64> = rows.iter().map(|(o, _)| o.primary.unwrap().max).collect();
            t.report("3", "standard behaviour persists along Im z = 0.1", decreasing(&errs), fmt(&errs));
        }
        Err(e) => t.report("3", "standard behaviour along Im z = 0.1", false, e.to_string()),
    }

    match sweep(&cfg, SuiteName::BasisWronskian) {
        Ok(rows) => {
            let errs: Vec<f64> = rows.iter().map(|(o, _)| o.primary.unwrap().max).collect();
            let last = *errs.last().unwrap();
            t.report(
                "4",
                "|w(f+, f-) - 2i| decreases in h",
                decreasing(&errs) && last < WRONSKIAN_TOL,
                format!("{} ; final < {WRONSKIAN_TOL}", fmt(&errs)),
            );
        }
        Err(e) => t.report("4", "basis Wronskian", false, e.to_string()),
    }

    criterion_5(&mut t, &cfg);

    match sweep(&cfg, SuiteName::BranchIdentities) {
        Ok(rows) => {
            let worst = rows.iter().map(|(o, _)| o.primary.unwrap().max).fold(0.0, f64::max);
            t.report(
                "6",
                "p - p_up = -2 pi and sqrt(sin p) flips sign below the positive axis (20 points)",
                worst < BRANCH_TOL,
                format!("max deviation {worst:.2e} < {BRANCH_TOL:e}"),
            );
        }
        Err(e) => t.report("6", "branch identities", false, e.to_string()),
    }

    let near = sweep(&cfg, SuiteName::NearRplus);
    match &near {
        Ok(rows) => {
            let contour = rows.iter().map(|(o, _)| metric(o, "g0_contour")).fold(0.0, f64::max);
            let tilde = rows.iter().map(|(o, _)| metric(o, "g0_tilde_mismatch")).fold(0.0, f64::max);
            t.report(
                "7",
                "G0 has no negative-order coefficients and equals its continued form",
                contour < CONTOUR_TOL && tilde < G0_TILDE_TOL,
                format!("coefficients {contour:.2e} < {CONTOUR_TOL:e}; mismatch {tilde:.2e} < {G0_TILDE_TOL:e}"),
            );
        }
        Err(e) => t.report("7", "G0 analyticity", false, e.to_string()),
    }

    match sweep(&cfg, SuiteName::Stirling) {
        Ok(rows) => {
            let o = &rows[0].0;
            let residual = o.primary.unwrap().max;
            let st: Vec<f64> = ["stirling_r5", "stirling_r10", "stirling_r20", "stirling_r40"].iter().map(|m| metric(o, m)).collect();
            t.report(
                "8",
                "Gamma recurrence/reflection on 100 points; Stirling error decreases over |z| = 5..40",
                residual < SPECFUN_TOL && decreasing(&st) && st[1] < STIRLING_AT_10_TOL,
                format!("residual {residual:.2e} < {SPECFUN_TOL:e}; Stirling {} ; |z|=10 < {STIRLING_AT_10_TOL}", fmt(&st)),
            );
        }
        Err(e) => t.report("8", "special functions", false, e.to_string()),
    }

    match (&sweep(&cfg, SuiteName::Wkb), &near) {
        (Ok(wkb), Ok(near)) => {
            let far: Vec<f64> = wkb.iter().map(|(o, _)| metric(o, "uniform_vs_wkb")).collect();
            let tube: Vec<f64> = near.iter().map(|(o, _)| metric(o, "uniform_vs_near")).collect();
            t.report(
                "9",
                "uniform law reduces to the WKB form outside the tube and to the near-axis form inside",
                decreasing(&far) && decreasing(&tube),
                format!("outside {} ; inside {}", fmt(&far), fmt(&tube)),
            );
        }
        (Err(e), _) | (_, Err(e)) => t.report("9", "consistency reductions", false, e.to_string()),
    }

    let elapsed = total.elapsed().as_secs_f64();
    t.report("runtime", "whole acceptance run", elapsed < TOTAL_SECONDS, format!("{elapsed:.2}s < {TOTAL_SECONDS}s"));
    if t.failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", t.failed);
        ExitCode::FAILURE
    }
}
