//! Exact solutions of `ψ(z+h) + ψ(z-h) + w(z) ψ(z) = 0` on lattice lines
//! `{θ + kh}` by the three-term recursion, Wronskians and basis
//! coefficients, and residue probes for the pole structure.
//!
//! Values are stored as mantissa/log-scale pairs so that solutions growing
//! like `exp(C/h)` never overflow.

use num_complex::Complex;

use crate::asymptotics::{AsymptoticModel, ConstantWkb};
use crate::error::{Error, Result};
use crate::logvalue::{ln_one_minus_exp, LogValue};
use crate::potential::Coefficient;
use crate::scalar::{im_unit, real, to_c64, two_pi, Real};

/// Lattice points closer than `h` times this to the pole are refused
/// outside probe mode.
pub const POLE_TOLERANCE_FACTOR: f64 = 1e-3;

/// Largest admissible `|ln |ψ||` before [`Error::Overflow`].
pub const MAX_LOG_MAGNITUDE: f64 = 1e6;

const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_BELOW: f64 = 1e-100;

/// The points `θ + kh`, `k_min ≤ k ≤ k_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeLine<T> {
    pub theta: Complex<T>,
    pub h: T,
    pub k_min: i64,
    pub k_max: i64,
    /// Allows lattice points arbitrarily close to the pole.
    pub pole_probe: bool,
}

impl<T: Real> LatticeLine<T> {
    pub fn new(theta: Complex<T>, h: T, k_min: i64, k_max: i64) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidArgument("lattice step must be positive".into()));
        }
        if k_max <= k_min {
            return Err(Error::InvalidArgument("lattice range needs at least two points".into()));
        }
        Ok(LatticeLine { theta, h, k_min, k_max, pole_probe: false })
    }

    pub fn probing(mut self) -> Self {
        self.pole_probe = true;
        self
    }

    pub fn point(&self, k: i64) -> Complex<T> {
        self.theta + real(self.h * T::lit(k as f64))
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.k_min && k <= self.k_max
    }

    fn check(&self, k: i64) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::RangeError { k, min: self.k_min, max: self.k_max })
        }
    }
}

/// Where the seeds of a solution came from.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedProvenance<T> {
    pub source: String,
    /// Index of the first of the two seeded points.
    pub k0: i64,
    pub points: [Complex<T>; 2],
}

/// `ψ(θ + kh)` for every `k` of a line.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSolution<T> {
    line: LatticeLine<T>,
    mantissa: Vec<Complex<T>>,
    scale: Vec<T>,
    provenance: SeedProvenance<T>,
}

impl<T: Real> LatticeSolution<T> {
    pub fn line(&self) -> &LatticeLine<T> {
        &self.line
    }

    pub fn provenance(&self) -> &SeedProvenance<T> {
        &self.provenance
    }

    fn index(&self, k: i64) -> Result<usize> {
        self.line.check(k)?;
        Ok((k - self.line.k_min) as usize)
    }

    pub fn value(&self, k: i64) -> Result<LogValue<T>> {
        let i = self.index(k)?;
        Ok(LogValue::from_complex(self.mantissa[i]) * LogValue::from_log(real(self.scale[i])))
    }

    /// The plain complex value; may overflow to infinity.
    pub fn complex(&self, k: i64) -> Result<Complex<T>> {
        Ok(self.value(k)?.to_complex())
    }

    pub fn values(&self) -> Vec<LogValue<T>> {
        (self.line.k_min..=self.line.k_max).map(|k| self.value(k).unwrap()).collect()
    }

    /// The solution multiplied by a constant.
    pub fn scaled(&self, factor: LogValue<T>) -> Self {
        let mut out = self.clone();
        if factor.is_zero() {
            for m in out.mantissa.iter_mut() {
                *m = real(T::zero());
            }
            return out;
        }
        let l = factor.log();
        let rot = Complex::from_polar(T::one(), l.im);
        for (m, s) in out.mantissa.iter_mut().zip(out.scale.iter_mut()) {
            *m = *m * rot;
            *s = *s + l.re;
        }
        out
    }

    /// Largest relative residual
    /// `|ψ(k+1) + ψ(k-1) + w ψ(k)| / (|ψ(k+1)| + |ψ(k-1)| + |w ψ(k)|)` over
    /// interior points.
    pub fn residual<C: Coefficient<T>>(&self, coef: &C) -> Result<T> {
        let mut worst = T::zero();
        for k in self.line.k_min + 1..self.line.k_max {
            let w = coef.w(self.line.point(k))?;
            let a = self.value(k + 1)?;
            let b = self.value(k - 1)?;
            let c = self.value(k)?.scale(w);
            let sum = a + b + c;
            if sum.is_zero() {
                continue;
            }
            let norm = [a, b, c]
                .iter()
                .filter(|v| !v.is_zero())
                .map(|v| v.ln_abs())
                .fold(T::neg_infinity(), T::max);
            let r = (sum.ln_abs() - norm).exp();
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

struct Running<T> {
    prev: Complex<T>,
    cur: Complex<T>,
    scale: T,
}

impl<T: Real> Running<T> {
    fn renormalize(&mut self) -> Result<()> {
        let m = self.cur.norm().max(self.prev.norm());
        if m > T::lit(RESCALE_ABOVE) || (m < T::lit(RESCALE_BELOW) && m > T::zero()) {
            self.prev = self.prev / m;
            self.cur = self.cur / m;
            self.scale = self.scale + m.ln();
            if self.scale.abs() > T::lit(MAX_LOG_MAGNITUDE) {
                return Err(Error::Overflow { log_magnitude: self.scale.as_f64() });
            }
        }
        Ok(())
    }
}

fn coefficient_at<T: Real, C: Coefficient<T>>(coef: &C, line: &LatticeLine<T>, k: i64) -> Result<Complex<T>> {
    let z = line.point(k);
    if !line.pole_probe && coef.pole_guard() > T::zero() && z.norm() < line.h * T::lit(POLE_TOLERANCE_FACTOR) {
        return Err(Error::PoleOnLattice { k });
    }
    coef.w(z).map_err(|e| match e {
        Error::PoleHit { .. } => Error::PoleOnLattice { k },
        other => other,
    })
}

/// Fills the whole line from the values at `k0` and `k0 + 1`, using
/// `ψ(z+h) = -w(z) ψ(z) - ψ(z-h)` to the right and the mirrored rule to the
/// left.
pub fn propagate<T: Real, C: Coefficient<T>>(
    coef: &C,
    line: &LatticeLine<T>,
    k0: i64,
    seeds: (LogValue<T>, LogValue<T>),
    source: &str,
) -> Result<LatticeSolution<T>> {
    line.check(k0)?;
    line.check(k0 + 1)?;
    let n = line.len();
    let mut mantissa = vec![real(T::zero()); n];
    let mut scale = vec![T::zero(); n];
    let s0 = if seeds.0.is_zero() && seeds.1.is_zero() {
        T::zero()
    } else {
        [seeds.0, seeds.1]
            .iter()
            .filter(|v| !v.is_zero())
            .map(|v| v.ln_abs())
            .fold(T::neg_infinity(), T::max)
    };
    let shift = LogValue::from_log(real(-s0));
    let m0 = (seeds.0 * shift).to_complex();
    let m1 = (seeds.1 * shift).to_complex();
    let i0 = (k0 - line.k_min) as usize;
    mantissa[i0] = m0;
    mantissa[i0 + 1] = m1;
    scale[i0] = s0;
    scale[i0 + 1] = s0;

    let mut run = Running { prev: m0, cur: m1, scale: s0 };
    for k in k0 + 1..line.k_max {
        let w = coefficient_at(coef, line, k)?;
        let next = -w * run.cur - run.prev;
        run.prev = run.cur;
        run.cur = next;
        let idx = (k + 1 - line.k_min) as usize;
        mantissa[idx] = next;
        scale[idx] = run.scale;
        run.renormalize()?;
        // keep the stored pair consistent with the renormalised state
        if scale[idx] != run.scale {
            mantissa[idx] = run.cur;
            scale[idx] = run.scale;
        }
    }

    let mut run = Running { prev: m1, cur: m0, scale: s0 };
    let mut k = k0;
    while k > line.k_min {
        let w = coefficient_at(coef, line, k)?;
        let next = -w * run.cur - run.prev;
        run.prev = run.cur;
        run.cur = next;
        let idx = (k - 1 - line.k_min) as usize;
        mantissa[idx] = next;
        scale[idx] = run.scale;
        run.renormalize()?;
        if scale[idx] != run.scale {
            mantissa[idx] = run.cur;
            scale[idx] = run.scale;
        }
        k -= 1;
    }

    Ok(LatticeSolution {
        line: *line,
        mantissa,
        scale,
        provenance: SeedProvenance {
            source: source.to_string(),
            k0,
            points: [line.point(k0), line.point(k0 + 1)],
        },
    })
}

/// `ψ₁(z+h) ψ₂(z) - ψ₁(z) ψ₂(z+h)` at `z = θ + kh`, in log form.
pub fn wronskian_log<T: Real>(s1: &LatticeSolution<T>, s2: &LatticeSolution<T>, k: i64) -> Result<LogValue<T>> {
    if s1.line != s2.line {
        return Err(Error::InvalidArgument("solutions live on different lines".into()));
    }
    let a = s1.value(k + 1)? * s2.value(k)?;
    let b = s1.value(k)? * s2.value(k + 1)?;
    Ok(a - b)
}

/// `ψ₁(z+h) ψ₂(z) - ψ₁(z) ψ₂(z+h)` at `z = θ + kh`.
pub fn wronskian<T: Real>(s1: &LatticeSolution<T>, s2: &LatticeSolution<T>, k: i64) -> Result<Complex<T>> {
    Ok(wronskian_log(s1, s2, k)?.to_complex())
}

/// Smallest basis Wronskian accepted by [`coefficients`].
pub const DEGENERATE_WRONSKIAN: f64 = 1e-6;

/// `(a, b)` with `ψ = a ψ₊ + b ψ₋` at `k` and `k + 1`:
/// `a = w(ψ, ψ₋)/w(ψ₊, ψ₋)`, `b = w(ψ₊, ψ)/w(ψ₊, ψ₋)`.
pub fn coefficients<T: Real>(
    sol: &LatticeSolution<T>,
    basis1: &LatticeSolution<T>,
    basis2: &LatticeSolution<T>,
    k: i64,
) -> Result<(Complex<T>, Complex<T>)> {
    let wb = wronskian_log(basis1, basis2, k)?;
    if wb.is_zero() || wb.ln_abs() < T::lit(DEGENERATE_WRONSKIAN).ln() {
        return Err(Error::DegenerateBasis { modulus: wb.to_complex().norm().as_f64() });
    }
    let a = wronskian_log(sol, basis2, k)? / wb;
    let b = wronskian_log(basis1, sol, k)? / wb;
    Ok((a.to_complex(), b.to_complex()))
}

/// A source of seed values for the recursion.
pub trait SeedModel<T: Real> {
    fn label(&self) -> &'static str;
    fn in_seed_region(&self, z: Complex<T>) -> bool;
    fn seed_value(&self, z: Complex<T>) -> Result<LogValue<T>>;
}

/// Standard WKB behaviour of `ψ`, admissible for `Re z ≤ -c`.
pub struct WkbSeeds<'a, T: Real>(pub &'a AsymptoticModel<T>);

/// Standard behaviour of `φ`, admissible for `Re z ≥ c`.
pub struct PhiSeeds<'a, T: Real>(pub &'a AsymptoticModel<T>);

impl<T: Real> SeedModel<T> for WkbSeeds<'_, T> {
    fn label(&self) -> &'static str {
        "wkb"
    }
    fn in_seed_region(&self, z: Complex<T>) -> bool {
        z.re <= -self.0.seed_depth()
    }
    fn seed_value(&self, z: Complex<T>) -> Result<LogValue<T>> {
        self.0.wkb_leading(z)
    }
}

impl<T: Real> SeedModel<T> for PhiSeeds<'_, T> {
    fn label(&self) -> &'static str {
        "phi"
    }
    fn in_seed_region(&self, z: Complex<T>) -> bool {
        z.re >= self.0.seed_depth()
    }
    fn seed_value(&self, z: Complex<T>) -> Result<LogValue<T>> {
        self.0.phi_standard(z)
    }
}

impl<T: Real> SeedModel<T> for ConstantWkb<T> {
    fn label(&self) -> &'static str {
        "constant"
    }
    fn in_seed_region(&self, _z: Complex<T>) -> bool {
        true
    }
    fn seed_value(&self, z: Complex<T>) -> Result<LogValue<T>> {
        Ok(self.value(z))
    }
}

/// Seed values at `k0` and `k0 + 1`.
pub fn seed_with<T: Real, M: SeedModel<T>>(
    model: &M,
    line: &LatticeLine<T>,
    k0: i64,
) -> Result<(LogValue<T>, LogValue<T>)> {
    let (a, b) = (line.point(k0), line.point(k0 + 1));
    for z in [a, b] {
        if !model.in_seed_region(z) {
            return Err(Error::OutsideSeedRegion { z: to_c64(z) });
        }
    }
    Ok((model.seed_value(a)?, model.seed_value(b)?))
}

/// WKB seeds for `ψ` at `k0`, `k0 + 1`; both points need `Re z ≤ -c`.
pub fn seed_wkb<T: Real>(model: &AsymptoticModel<T>, line: &LatticeLine<T>, k0: i64) -> Result<(LogValue<T>, LogValue<T>)> {
    seed_with(&WkbSeeds(model), line, k0)
}

/// Seeds for `φ` at `k0`, `k0 + 1`; both points need `Re z ≥ c`.
pub fn seed_phi<T: Real>(model: &AsymptoticModel<T>, line: &LatticeLine<T>, k0: i64) -> Result<(LogValue<T>, LogValue<T>)> {
    seed_with(&PhiSeeds(model), line, k0)
}

/// `ψ` on `line`, seeded at its two leftmost points.
pub fn solve_psi<T: Real>(model: &AsymptoticModel<T>, line: &LatticeLine<T>) -> Result<LatticeSolution<T>> {
    let seeds = seed_wkb(model, line, line.k_min)?;
    propagate(model.problem(), line, line.k_min, seeds, "wkb")
}

/// `φ` on `line`, seeded at its two rightmost points.
pub fn solve_phi<T: Real>(model: &AsymptoticModel<T>, line: &LatticeLine<T>) -> Result<LatticeSolution<T>> {
    let seeds = seed_phi(model, line, line.k_max - 1)?;
    propagate(model.problem(), line, line.k_max - 1, seeds, "phi")
}

/// `f₊ = ψ / n₀` on `line`.
pub fn solve_f_plus<T: Real>(model: &AsymptoticModel<T>, line: &LatticeLine<T>) -> Result<LatticeSolution<T>> {
    Ok(solve_psi(model, line)?.scaled(LogValue::from_log(-model.ln_n0())))
}

/// `f₋ = n₁ (1 - e^{2πiθ/h}) φ` on `line` (the periodic factor is constant
/// along a line).
pub fn solve_f_minus<T: Real>(model: &AsymptoticModel<T>, line: &LatticeLine<T>) -> Result<LatticeSolution<T>> {
    let x = im_unit::<T>() * line.theta * (two_pi::<T>() / line.h);
    let factor = LogValue::from_log(model.ln_n1() + ln_one_minus_exp(x));
    Ok(solve_phi(model, line)?.scaled(factor))
}

/// Smallest `K ≥ 1` with `Re(θ - K h) ≤ -c`.
pub fn steps_left<T: Real>(theta: Complex<T>, h: T, c: T) -> i64 {
    let mut k = ((theta.re + c) / h).ceil().to_i64().unwrap_or(1).max(1);
    while theta.re - h * T::lit(k as f64) > -c {
        k += 1;
    }
    k
}

/// Smallest `K ≥ 1` with `Re(θ + K h) ≥ c`.
pub fn steps_right<T: Real>(theta: Complex<T>, h: T, c: T) -> i64 {
    let mut k = ((c - theta.re) / h).ceil().to_i64().unwrap_or(1).max(1);
    while theta.re + h * T::lit(k as f64) < c {
        k += 1;
    }
    k
}

/// Line through `z` (at `k = 0`) whose two leftmost points are admissible
/// `ψ` seeds, extended `extra_right` steps past `z`.
pub fn psi_line_through<T: Real>(model: &AsymptoticModel<T>, z: Complex<T>, extra_right: i64) -> Result<LatticeLine<T>> {
    let k = steps_left(z, model.h(), model.seed_depth());
    LatticeLine::new(z, model.h(), -k - 1, extra_right.max(1))
}

/// Line through `z` (at `k = 0`) whose two rightmost points are admissible
/// `φ` seeds, extended `extra_left` steps before `z`.
pub fn phi_line_through<T: Real>(model: &AsymptoticModel<T>, z: Complex<T>, extra_left: i64) -> Result<LatticeLine<T>> {
    let k = steps_right(z, model.h(), model.seed_depth());
    LatticeLine::new(z, model.h(), -extra_left.max(1), k + 1)
}

/// What a [`residue_probe`] examines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeTarget {
    /// `lim (z - nh) f₊(z)`, a simple pole of `f₊` at `nh`, `n ≥ 1`.
    FPlusPole,
    /// `lim f₋(z) / (z - nh)`, a simple zero of `f₋` at `nh`, `n ≥ 0`.
    FMinusZero,
    /// `lim (z + nh) φ(z)`, a simple pole of `φ` at `-nh`, `n ≥ 1`.
    PhiPole,
}

/// Result of a [`residue_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRecord<T> {
    pub target: ProbeTarget,
    pub n: i64,
    pub point: Complex<T>,
    pub deltas: Vec<T>,
    /// Symmetric estimates `(R(+δ) + R(-δ))/2` for each `δ`.
    pub estimates: Vec<Complex<T>>,
    /// Richardson limit of the estimates.
    pub extrapolated: Complex<T>,
    /// Relative disagreement of the extrapolations from the two coarser and
    /// the two finer offsets.
    pub residual: T,
    /// `(R(+δ) - R(-δ)) / 2δ` at the smallest `δ`: the next-order term.
    pub next_order: Complex<T>,
    /// Converged to a nonzero limit with residual below 5%.
    pub simple: bool,
}

/// Offsets, in units of `h`, of the probe lines.
pub const PROBE_DELTAS: [f64; 3] = [0.1, 0.05, 0.025];
const PROBE_RESIDUAL: f64 = 0.05;

/// Estimates the residue (or zero slope) of a basis solution at a lattice
/// point by evaluating lattice solutions on the parallel lines
/// `θ = ±δ` and extrapolating `δ → 0`.
pub fn residue_probe<T: Real>(model: &AsymptoticModel<T>, target: ProbeTarget, n: i64) -> Result<ProbeRecord<T>> {
    let h = model.h();
    let strip = model.problem().strip();
    let nh = h * T::lit(n as f64);
    let min_n = if target == ProbeTarget::FMinusZero { 0 } else { 1 };
    if n < min_n {
        return Err(Error::InvalidArgument(format!("probe index must be at least {min_n}")));
    }
    let point = match target {
        ProbeTarget::PhiPole => real(-nh),
        _ => real(nh),
    };
    if nh >= strip.d_x {
        return Err(Error::OutsideStrip { z: to_c64(point) });
    }
    let c = model.seed_depth();
    let zero = real(T::zero());
    // seeds sit at fixed lattice indices for every offset
    let widest = h * T::lit(PROBE_DELTAS[0]);
    let k_left = steps_left(real(widest), h, c) + 1;
    let k_right = steps_right(real(-widest), h, c) + 1;
    let mut deltas = Vec::new();
    let mut estimates = Vec::new();
    let mut next_order = zero;
    for f in PROBE_DELTAS {
        let delta = h * T::lit(f);
        let mut r = [zero, zero];
        for (slot, sign) in [T::one(), -T::one()].into_iter().enumerate() {
            let theta = real(delta * sign);
            let offset = delta * sign;
            let value = match target {
                ProbeTarget::FPlusPole => {
                    let line = LatticeLine::new(theta, h, -k_left, n)?.probing();
                    let f = solve_f_plus(model, &line)?;
                    f.value(n)?.scale(real(offset))
                }
                ProbeTarget::FMinusZero => {
                    let line = LatticeLine::new(theta, h, n - 1, k_right)?.probing();
                    let f = solve_f_minus(model, &line)?;
                    f.value(n)?.scale(real(offset.recip()))
                }
                ProbeTarget::PhiPole => {
                    let line = LatticeLine::new(theta, h, -n - 1, k_right)?.probing();
                    let f = solve_phi(model, &line)?;
                    f.value(-n)?.scale(real(offset))
                }
            };
            r[slot] = value.to_complex();
        }
        deltas.push(delta);
        estimates.push((r[0] + r[1]) * T::lit(0.5));
        next_order = (r[0] - r[1]) / (delta * T::lit(2.0));
    }
    // symmetric averages carry an O(δ²) error; consecutive offsets halve
    let richardson = |a: Complex<T>, b: Complex<T>| (b * T::lit(4.0) - a) / T::lit(3.0);
    let coarse = richardson(estimates[0], estimates[1]);
    let extrapolated = richardson(estimates[1], estimates[2]);
    let residual = (extrapolated - coarse).norm() / extrapolated.norm();
    if !extrapolated.norm().is_finite() || !residual.is_finite() {
        return Err(Error::ExtrapolationUnstable { spread: residual.as_f64() });
    }
    Ok(ProbeRecord {
        target,
        n,
        point,
        deltas,
        estimates,
        extrapolated,
        residual,
        next_order,
        simple: residual < T::lit(PROBE_RESIDUAL) && extrapolated.norm() > T::zero(),
    })
}
