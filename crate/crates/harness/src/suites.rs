//! The verification suites and the sweep runner.

use std::f64::consts::PI;
use std::time::Instant;

use dswkb::lattice::{
    psi_line_through, residue_probe, solve_f_minus, solve_f_plus, solve_psi, steps_left, steps_right, wronskian,
    LatticeLine, ProbeTarget,
};
use dswkb::specfun::{ln_gamma, ln_sin_pi, ln_stirling_sector, SectorSpec};
use dswkb::{Cplx, Log, Model};
use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{SuiteName, SweepConfig};
use crate::report::{Check, HRow, Metric, ProblemSummary, SuiteReport, SweepReport, Volatile, SCHEMA_VERSION};

/// Width of the tube around the positive axis, as a fraction of `d_x`.
pub const TUBE_FRACTION: f64 = 0.1;
/// Sector gap used by the Stirling suite.
pub const STIRLING_EPSILON: f64 = 0.2;
pub const STIRLING_RADII: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
/// Radius and node count of the contour used for Laurent coefficients.
pub const CONTOUR_RADIUS: f64 = 0.1;
pub const CONTOUR_NODES: usize = 256;
const CONTOUR_ORDERS: usize = 8;

/// Measurements of one suite at one `h`.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub primary: Option<Stats>,
    pub metrics: Vec<Metric>,
}

impl Outcome {
    fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.push(Metric { name: name.to_string(), value });
        self
    }
}

/// Max, mean and location of the worst of a set of errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub max: f64,
    pub mean: f64,
    pub worst: Cplx,
}

impl Stats {
    fn from(errors: &[(Cplx, f64)]) -> Stats {
        let mut s = Stats { max: f64::NEG_INFINITY, mean: 0.0, worst: Cplx::new(f64::NAN, f64::NAN) };
        for &(z, e) in errors {
            // NaN counts as the worst possible error
            if e.is_nan() || e > s.max {
                s.max = if e.is_nan() { f64::INFINITY } else { e };
                s.worst = z;
            }
            s.mean += e / errors.len() as f64;
        }
        s
    }
}

/// Pass/fail rules attached to each suite.
#[derive(Clone, Debug)]
enum Rule {
    /// Strictly decreasing along the sweep.
    Decreasing(&'static str),
    /// Below the limit at the smallest `h`.
    BelowAtFinest(&'static str, f64),
    /// Below the limit at every `h`.
    Below(&'static str, f64),
    /// At most the limit at every `h`.
    AtMost(&'static str, f64),
    /// The listed metrics strictly decrease, at every `h`.
    Ordered(Vec<&'static str>),
}

impl Rule {
    fn describe(&self) -> String {
        match self {
            Rule::Decreasing(m) => format!("{m} strictly decreasing in h"),
            Rule::BelowAtFinest(m, l) => format!("{m} < {l:e} at the smallest h"),
            Rule::Below(m, l) => format!("{m} < {l:e} at every h"),
            Rule::AtMost(m, l) => format!("{m} <= {l:e} at every h"),
            Rule::Ordered(ms) => format!("{} strictly decreasing at every h", ms.join(" > ")),
        }
    }

    fn row_ok(&self, row: &HRow, finest: bool) -> bool {
        let get = |m: &str| value(row, m);
        match self {
            Rule::Decreasing(_) => true,
            Rule::BelowAtFinest(m, l) => !finest || get(m).is_some_and(|v| v < *l),
            Rule::Below(m, l) => get(m).is_some_and(|v| v < *l),
            Rule::AtMost(m, l) => get(m).is_some_and(|v| v <= *l),
            Rule::Ordered(ms) => {
                let vals: Option<Vec<f64>> = ms.iter().map(|m| get(m)).collect();
                vals.is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]))
            }
        }
    }

    fn sweep_ok(&self, rows: &[HRow]) -> bool {
        match self {
            Rule::Decreasing(m) => {
                let vals: Option<Vec<f64>> = rows.iter().map(|r| value(r, m)).collect();
                vals.is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]))
            }
            _ => rows.iter().enumerate().all(|(i, r)| self.row_ok(r, i + 1 == rows.len())),
        }
    }
}

fn value(row: &HRow, name: &str) -> Option<f64> {
    match name {
        "max_error" => row.max_error,
        "mean_error" => row.mean_error,
        _ => row.metric(name),
    }
}

fn rules(suite: SuiteName, config: &SweepConfig) -> Vec<Rule> {
    let t = &config.thresholds;
    match suite {
        SuiteName::Wkb => vec![Rule::Decreasing("max_error"), Rule::Decreasing("uniform_vs_wkb")],
        SuiteName::UniformGamma => vec![
            Rule::Decreasing("max_error"),
            Rule::BelowAtFinest("max_error", t.uniform_gamma),
            Rule::AtMost("interior_over_boundary", 1.0),
        ],
        SuiteName::NearRplus => vec![
            Rule::Decreasing("max_error"),
            Rule::Decreasing("uniform_vs_near"),
            Rule::Below("g0_tilde_mismatch", t.g0_equality),
            Rule::Below("g0_contour", t.contour_coefficient),
            Rule::Below("g1_contour", t.contour_coefficient),
        ],
        SuiteName::BasisWronskian => {
            vec![Rule::Decreasing("max_error"), Rule::BelowAtFinest("max_error", t.basis_wronskian)]
        }
        SuiteName::PoleStructure => vec![
            Rule::Below("max_error", t.probe_residual),
            Rule::AtMost("non_simple", 0.0),
            Rule::Decreasing("residue_vs_gamma_law"),
        ],
        SuiteName::BranchIdentities => vec![Rule::Below("max_error", t.branch_identity)],
        SuiteName::Stirling => vec![
            Rule::Below("max_error", t.specfun_residual),
            Rule::Ordered(vec!["stirling_r5", "stirling_r10", "stirling_r20", "stirling_r40"]),
            Rule::Below("stirling_r10", t.stirling_at_10),
        ],
        SuiteName::ContinuationPrinciple => vec![Rule::Decreasing("max_error"), Rule::Below("max_im_p", 0.0)],
    }
}

fn suite_seed(config: &SweepConfig, suite: SuiteName) -> u64 {
    config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (suite as u64 + 1)
}

fn rng(config: &SweepConfig, suite: SuiteName) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(suite_seed(config, suite))
}

fn recursion_psi(m: &Model, z: Cplx) -> dswkb::Result<Log> {
    let line = psi_line_through(m, z, 1)?;
    solve_psi(m, &line)?.value(0)
}

/// Points of a rectangular grid scaled to the strip, offset off the axes.
fn grid(config: &SweepConfig, n: usize) -> Vec<Cplx> {
    let (dx, dy) = (0.85 * config.strip.d_x, 0.85 * config.strip.d_y);
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = -dx + 2.0 * dx * i as f64 / (n - 1) as f64;
            let y = -dy + 2.0 * dy * j as f64 / (n - 1) as f64;
            pts.push(Cplx::new(x + 0.0037 * dx, y + 0.0351 * dy));
        }
    }
    pts
}

fn in_tube(z: Cplx, delta: f64) -> bool {
    let d = if z.re >= 0.0 { z.im.abs() } else { z.norm() };
    d < delta
}

fn samples(config: &SweepConfig, suite: SuiteName, default: impl FnOnce() -> Vec<Cplx>) -> Vec<Cplx> {
    config.samples.get(suite.as_str()).cloned().unwrap_or_else(default)
}

fn wkb(config: &SweepConfig, m: &Model) -> dswkb::Result<Outcome> {
    let delta = TUBE_FRACTION * config.strip.d_x;
    let pts = samples(config, SuiteName::Wkb, || grid(config, 7).into_iter().filter(|z| !in_tube(*z, delta)).collect());
    let mut errs = Vec::new();
    let mut uniform: f64 = 0.0;
    for z in pts {
        let standard = m.wkb_leading(z)?;
        errs.push((z, recursion_psi(m, z)?.rel_diff(standard)));
        uniform = uniform.max(m.psi_uniform(z)?.rel_diff(standard));
    }
    Ok(Outcome { primary: Some(Stats::from(&errs)), ..Default::default() }.metric("uniform_vs_wkb", uniform))
}

fn uniform_gamma(config: &SweepConfig, m: &Model) -> dswkb::Result<Outcome> {
    let (dx, dy) = (0.85 * config.strip.d_x, 0.85 * config.strip.d_y);
    let pts = samples(config, SuiteName::UniformGamma, || {
        let mut r = rng(config, SuiteName::UniformGamma);
        let mut v = Vec::new();
        while v.len() < 50 {
            let z = Cplx::new(r.gen_range(-dx..dx), r.gen_range(-dy..dy));
            if z.norm() > 1e-3 {
                v.push(z);
            }
        }
        v
    });
    let ratio_error = |z: Cplx| -> dswkb::Result<f64> { Ok(recursion_psi(m, z)?.rel_diff(m.psi_uniform(z)?)) };
    let mut errs = Vec::new();
    for z in pts {
        errs.push((z, ratio_error(z)?));
    }
    // maximum principle on the disk of radius δ around the pole
    let delta = TUBE_FRACTION * config.strip.d_x;
    let mut boundary: f64 = 0.0;
    for k in 0..64 {
        boundary = boundary.max(ratio_error(Cplx::from_polar(delta, 2.0 * PI * (k as f64 + 0.3) / 64.0))?);
    }
    let mut interior: f64 = 0.0;
    for k in 0..8 {
        let angle = 2.0 * PI * (k as f64 + 0.1) / 8.0;
        interior = interior.max(ratio_error(Cplx::from_polar(0.5 * delta, angle))?);
        interior = interior.max(ratio_error(Cplx::from_polar(0.2 * delta, angle + 0.4))?);
    }
    interior = interior.max(ratio_error(Cplx::new(0.5 * m.h(), 0.0))?);
    Ok(Outcome { primary: Some(Stats::from(&errs)), ..Default::default() }
        .metric("boundary_max", boundary)
        .metric("interior_max", interior)
        .metric("interior_over_boundary", interior / boundary))
}

fn negative_order_coefficients(f: impl Fn(Cplx) -> dswkb::Result<Log>) -> dswkb::Result<f64> {
    let n = CONTOUR_NODES;
    let angle = |j: usize| 2.0 * PI * (j as f64 + 0.5) / n as f64;
    let mut logs = Vec::with_capacity(n);
    for j in 0..n {
        logs.push(f(Cplx::from_polar(CONTOUR_RADIUS, angle(j)))?);
    }
    // scale by the sup norm so that exponentially large values stay finite
    let top = logs.iter().map(|l| l.ln_abs()).fold(f64::NEG_INFINITY, f64::max);
    let vals: Vec<Cplx> = logs.iter().map(|l| (l.log() - top).exp()).collect();
    let mut worst: f64 = 0.0;
    for m in 1..=CONTOUR_ORDERS {
        let s: Cplx = vals.iter().enumerate().map(|(j, v)| v * Cplx::from_polar(1.0, m as f64 * angle(j))).sum();
        worst = worst.max(s.norm() / n as f64);
    }
    Ok(worst)
}

fn near_rplus(config: &SweepConfig, m: &Model) -> dswkb::Result<Outcome> {
    let h = m.h();
    let delta = TUBE_FRACTION * config.strip.d_x;
    let pts = samples(config, SuiteName::NearRplus, || {
        let x_max = 0.85 * config.strip.d_x;
        let mut v = Vec::new();
        for k in 0..8 {
            let x = delta + (x_max - delta) * k as f64 / 7.0 + 0.0037;
            for y in [-0.85, -0.43, -0.17, 0.17, 0.43, 0.85] {
                v.push(Cplx::new(x, y * delta));
            }
        }
        v
    });
    let lattice_distance = |z: Cplx| {
        let n = (z.re / h).round().max(1.0);
        (z - n * h).norm()
    };
    let mut errs = Vec::new();
    let mut uniform: f64 = 0.0;
    for z in pts.into_iter().filter(|z| lattice_distance(*z) > 0.25 * h) {
        let near = m.psi_near_rplus(z)?;
        errs.push((z, recursion_psi(m, z)?.rel_diff(near)));
        uniform = uniform.max(m.psi_uniform(z)?.rel_diff(near));
    }
    let (dx, dy) = (config.strip.d_x, config.strip.d_y);
    let mut tilde: f64 = 0.0;
    for (a, b) in [(0.3, 0.15), (-0.3, 0.55), (0.7, 0.85), (0.3, -0.15), (-0.55, -0.3), (0.85, -0.85), (0.05, 0.02), (0.05, -0.02)] {
        let z = Cplx::new(a * dx, b * dy);
        tilde = tilde.max(m.g0(z)?.rel_diff(m.g0_tilde(z)?));
    }
    Ok(Outcome { primary: Some(Stats::from(&errs)), ..Default::default() }
        .metric("uniform_vs_near", uniform)
        .metric("g0_tilde_mismatch", tilde)
        .metric("g0_contour", negative_order_coefficients(|z| m.g0(z))?)
        .metric("g1_contour", negative_order_coefficients(|z| m.g1(z))?))
}

fn basis_wronskian(config: &SweepConfig, m: &Model) -> dswkb::Result<Outcome> {
    let h = m.h();
    let c = m.seed_depth();
    let pts = samples(config, SuiteName::BasisWronskian, || {
        [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|f| {
                let y = f / 7.0 * config.strip.d_y;
                Cplx::new(if *f == 0.0 { 0.5 * h } else { 0.0 }, y)
            })
            .collect()
    });
    let mut errs = Vec::new();
    for z in pts {
        let line = LatticeLine::new(z, h, -steps_left(z, h, c) - 1, steps_right(z, h, c) + 1)?;
        let w = wronskian(&solve_f_plus(m, &line)?, &solve_f_minus(m, &line)?, 0)?;
        errs.push((z, (w - Cplx::new(0.0, 2.0)).norm()));
    }
    Ok(Outcome { primary: Some(Stats::from(&errs)), ..Default::default() })
}

fn pole_structure(_config: &SweepConfig, m: &Model) -> dswkb::Result<Outcome> {
    let h = m.h();
    let mut residuals = Vec::new();
    let mut non_simple = 0.0;
    let mut law: f64 = 0.0;
    let mut factorial = 1.0;
    for n in 1..=3i64 {
        if n > 1 {
            factorial *= (n - 1) as f64;
        }
        let r = residue_probe(m, ProbeTarget::FPlusPole, n)?;
        debug!("f+ pole {n}: {:?}", r.extrapolated);
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let predicted = m.g0(Cplx::new(n as f64 * h, 0.0))?.to_complex() * (-h * sign / factorial);
        law = law.max((r.extrapolated / predicted - 1.0).norm());
        residuals.push((r.point, r.residual));
        non_simple += f64::from(u8::from(!r.simple));
    }
    for (target, range) in [(ProbeTarget::FMinusZero, 0..=2i64), (ProbeTarget::PhiPole, 1..=3i64)] {
        for n in range {
            let r = residue_probe(m, target, n)?;
            residuals.push((r.point, r.residual));
            non_simple += f64::from(u8::from(!r.simple));
        }
    }
    Ok(Outcome { primary: Some(Stats::from(&residuals)), ..Default::default() }
        .metric("non_simple", non_simple)
        .metric("residue_vs_gamma_law", law))
}

fn branch_identities(config: &SweepConfig, m: &Model) -> dswkb::Result<Outcome> {
    let delta = TUBE_FRACTION * config.strip.d_x;
    let x_max = 0.85 * config.strip.d_x;
    let pts = samples(config, SuiteName::BranchIdentities, || {
        let mut r = rng(config, SuiteName::BranchIdentities);
        (0..20).map(|_| Cplx::new(r.gen_range(0.0..x_max), -r.gen_range(0.03 * delta..delta))).collect()
    });
    let branch = m.branch();
    let top = 0.9 * config.strip.d_y;
    let mut shift: f64 = 0.0;
    let mut sign: f64 = 0.0;
    let mut errs = Vec::new();
    for z in pts {
        let down = branch.at(z)?;
        let up = branch.at_via(&[Cplx::new(branch.base_point().re, top), Cplx::new(z.re, top)], z)?;
        let a = (down.p - up.p + 2.0 * PI).norm();
        let b = (down.sqrt_sin + up.sqrt_sin).norm() / down.sqrt_sin.norm();
        shift = shift.max(a);
        sign = sign.max(b);
        errs.push((z, a.max(b)));
    }
    Ok(Outcome { primary: Some(Stats::from(&errs)), ..Default::default() }
        .metric("p_shift_error", shift)
        .metric("sqrt_sign_error", sign))
}

fn stirling(config: &SweepConfig, _m: &Model) -> dswkb::Result<Outcome> {
    let mut r = rng(config, SuiteName::Stirling);
    let mut errs = Vec::new();
    let mut reflection: f64 = 0.0;
    while errs.len() < 100 {
        let z = Cplx::new(r.gen_range(-20.0..20.0), r.gen_range(-20.0..20.0));
        let near_pole = z.re < 0.5 && (z - z.re.round()).norm() <= 0.1;
        if z.norm() >= 20.0 || near_pole {
            continue;
        }
        let rec = ((ln_gamma(z + 1.0)? - ln_gamma(z)? - z.ln()).exp() - 1.0).norm();
        let refl = ((ln_gamma(z)? + ln_gamma(1.0 - z)? + ln_sin_pi(z) - PI.ln()).exp() - 1.0).norm();
        reflection = reflection.max(refl);
        errs.push((z, rec.max(refl)));
    }
    let sector = SectorSpec::new(STIRLING_EPSILON)?;
    let mut out = Outcome { primary: Some(Stats::from(&errs)), ..Default::default() }.metric("reflection_residual", reflection);
    let angles = [0.0, PI / 2.0, -PI / 2.0, PI - 2.0 * STIRLING_EPSILON, -(PI - 2.0 * STIRLING_EPSILON)];
    for radius in STIRLING_RADII {
        let mut worst: f64 = 0.0;
        for a in angles {
            let z = Cplx::from_polar(radius, a);
            worst = worst.max(((ln_stirling_sector(z, &sector)? - ln_gamma(z + 1.0)?).exp() - 1.0).norm());
        }
        out = out.metric(&format!("stirling_r{radius}"), worst);
    }
    Ok(out)
}

fn continuation_principle(config: &SweepConfig, m: &Model) -> dswkb::Result<Outcome> {
    let pts = samples(config, SuiteName::ContinuationPrinciple, || {
        let y = 2.0 / 7.0 * config.strip.d_y;
        let half = 5.0 / 7.0 * config.strip.d_x;
        (0..=20).map(|k| Cplx::new(-half + half * k as f64 / 10.0, y)).collect()
    });
    let mut errs = Vec::new();
    let mut im_p = f64::NEG_INFINITY;
    for z in pts {
        im_p = im_p.max(m.regularized().p(z)?.im);
        errs.push((z, recursion_psi(m, z)?.rel_diff(m.wkb_leading(z)?)));
    }
    Ok(Outcome { primary: Some(Stats::from(&errs)), ..Default::default() }.metric("max_im_p", im_p))
}

/// Runs one suite at one `h` on a freshly built model.
pub fn run_suite(config: &SweepConfig, suite: SuiteName, h: f64) -> dswkb::Result<Outcome> {
    let model = Model::new(config.problem.clone(), h, config.z0, config.z1)?;
    match suite {
        SuiteName::Wkb => wkb(config, &model),
        SuiteName::UniformGamma => uniform_gamma(config, &model),
        SuiteName::NearRplus => near_rplus(config, &model),
        SuiteName::BasisWronskian => basis_wronskian(config, &model),
        SuiteName::PoleStructure => pole_structure(config, &model),
        SuiteName::BranchIdentities => branch_identities(config, &model),
        SuiteName::Stirling => stirling(config, &model),
        SuiteName::ContinuationPrinciple => continuation_principle(config, &model),
    }
}

fn row(h: f64, result: &dswkb::Result<Outcome>) -> HRow {
    match result {
        Ok(o) => HRow {
            h,
            max_error: o.primary.map(|s| s.max),
            mean_error: o.primary.map(|s| s.mean),
            worst_point: o.primary.map(|s| [s.worst.re, s.worst.im]),
            metrics: o.metrics.clone(),
            pass: true,
            error: None,
        },
        Err(e) => HRow { h, max_error: None, mean_error: None, worst_point: None, metrics: Vec::new(), pass: false, error: Some(e.to_string()) },
    }
}

/// Runs every configured suite at every `h` on `jobs` worker threads.
pub fn run(config: &SweepConfig, jobs: usize) -> SweepReport {
    let tasks: Vec<(SuiteName, usize)> =
        config.suites.iter().flat_map(|s| (0..config.h_list.len()).map(move |i| (*s, i))).collect();
    let work = |&(suite, i): &(SuiteName, usize)| {
        let h = config.h_list[i];
        let start = Instant::now();
        let result = run_suite(config, suite, h);
        let elapsed = start.elapsed().as_secs_f64();
        match &result {
            Ok(_) => info!("{suite} at h={h}: done in {elapsed:.2}s"),
            Err(e) => info!("{suite} at h={h}: {e}"),
        }
        ((suite, i), result, elapsed)
    };
    let mut results: Vec<_> = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(|| tasks.par_iter().map(work).collect()),
        Err(_) => tasks.iter().map(work).collect(),
    };
    results.sort_by_key(|(key, _, _)| *key);

    let mut volatile = Volatile { timestamp: chrono::Utc::now().to_rfc3339(), ..Default::default() };
    let mut suites = Vec::new();
    for &suite in &config.suites {
        let mut rows = Vec::new();
        for ((s, i), result, elapsed) in results.iter().filter(|(k, _, _)| k.0 == suite) {
            let h = config.h_list[*i];
            rows.push(row(h, result));
            volatile.runtime_seconds.insert(format!("{s}@{h}"), *elapsed);
        }
        let suite_rules = rules(suite, config);
        let n = rows.len();
        for (i, r) in rows.iter_mut().enumerate() {
            r.pass = r.error.is_none() && suite_rules.iter().all(|rule| rule.row_ok(r, i + 1 == n));
        }
        let checks: Vec<Check> = suite_rules.iter().map(|rule| Check { rule: rule.describe(), pass: rule.sweep_ok(&rows) }).collect();
        let pass = rows.iter().all(|r| r.error.is_none()) && checks.iter().all(|c| c.pass);
        suites.push(SuiteReport { suite, rows, checks, pass });
    }

    SweepReport {
        schema_version: SCHEMA_VERSION.to_string(),
        problem: ProblemSummary {
            potential: config.potential.clone(),
            parameters: config.parameters.iter().map(|(k, v)| (k.clone(), [v.re, v.im])).collect(),
            energy: [config.energy.re, config.energy.im],
            d_x: config.strip.d_x,
            d_y: config.strip.d_y,
            z0: [config.z0.re, config.z0.im],
            z1: [config.z1.re, config.z1.im],
            seed: config.seed,
            im_p_margin: config.regularity.im_p_margin,
        },
        h_list: config.h_list.clone(),
        pass: suites.iter().all(|s| s.pass),
        suites,
        volatile,
    }
}
