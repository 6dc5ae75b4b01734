//! Semiclassical asymptotic formulas for solutions of
//! `ψ(z+h) + ψ(z-h) + w(z) ψ(z) = 0`.
//!
//! All evaluators return [`LogValue`]s: the quantities grow or decay like
//! `exp(C/h)` and are compared through their logarithms.
//!
//! Notation used in the formulas below: `q = p - i ln(-z)` and
//! `√T = √(-z sin p)` are analytic on the strip (see
//! [`RegularizedMomentum`]), `RA(z) = ∫₀ᶻ q dζ`.

use num_complex::Complex;

use crate::action::{integrate_tracked, log_primitive, regularized_action_with, ActionCache};
use crate::error::{Error, Result};
use crate::logvalue::{ln_one_minus_exp, LogValue};
use crate::momentum::{branch_at, MomentumBranch, RegularizedMomentum};
use crate::potential::SpectralProblem;
use crate::quadrature::QuadratureOptions;
use crate::scalar::{im_unit, real, to_c64, two_pi, Real};
use crate::specfun::{ln_gamma, ln_gamma_one_minus};

/// Fraction of `d_x` beyond which lattice seeds are placed.
pub const SEED_DEPTH_FRACTION: f64 = 0.6;

/// Primitive of `π + i ln z` (principal log), zero at the origin.
fn up_primitive<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() == T::zero() {
        return z;
    }
    z * T::PI() + im_unit::<T>() * (z * z.ln() - z)
}

/// Bundled data for evaluating every asymptotic formula at fixed `h`.
pub struct AsymptoticModel<T: Real> {
    problem: SpectralProblem<T>,
    branch: MomentumBranch<T, SpectralProblem<T>>,
    reg: RegularizedMomentum<T>,
    action: ActionCache<T, SpectralProblem<T>>,
    quad: QuadratureOptions<T>,
    h: T,
    z0: Complex<T>,
    z1: Complex<T>,
    ra_z0: Complex<T>,
    ra_z1: Complex<T>,
    ln_n0: Complex<T>,
    ln_n1: Complex<T>,
}

impl<T: Real> AsymptoticModel<T> {
    /// `z0` must be a negative and `z1` a positive real point of the strip.
    pub fn new(problem: SpectralProblem<T>, h: T, z0: Complex<T>, z1: Complex<T>) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidArgument("h must be positive".into()));
        }
        if z0.im != T::zero() || !(z0.re < T::zero()) || z1.im != T::zero() || !(z1.re > T::zero()) {
            return Err(Error::InvalidArgument(
                "anchors must satisfy z0 < 0 < z1 on the real axis".into(),
            ));
        }
        for z in [z0, z1] {
            if !problem.strip().contains(z) {
                return Err(Error::OutsideStrip { z: to_c64(z) });
            }
        }
        let branch = branch_at(problem.clone(), z0)?;
        let reg = RegularizedMomentum::new(&branch)?;
        let quad = QuadratureOptions::default();
        let ra_z0 = regularized_action_with(&reg, z0, None, &quad)?;
        let ra_z1 = regularized_action_with(&reg, z1, None, &quad)?;
        let i = im_unit::<T>();
        // ∫_{z0}^0 p and ∫_{z1}^0 p (the second with p continued through ℂ₊)
        let ln_n0 = i / h * (-ra_z0 - i * log_primitive(z0));
        let ln_n1 = i / h * (-ra_z1 - up_primitive(z1));
        let action = ActionCache::new(branch.clone());
        Ok(AsymptoticModel {
            problem,
            branch,
            reg,
            action,
            quad,
            h,
            z0,
            z1,
            ra_z0,
            ra_z1,
            ln_n0,
            ln_n1,
        })
    }

    pub fn problem(&self) -> &SpectralProblem<T> {
        &self.problem
    }

    pub fn branch(&self) -> &MomentumBranch<T, SpectralProblem<T>> {
        &self.branch
    }

    pub fn regularized(&self) -> &RegularizedMomentum<T> {
        &self.reg
    }

    pub fn action_cache(&self) -> &ActionCache<T, SpectralProblem<T>> {
        &self.action
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn z0(&self) -> Complex<T> {
        self.z0
    }

    pub fn z1(&self) -> Complex<T> {
        self.z1
    }

    /// `ln n₀`, `n₀ = exp((i/h) ∫_{z0}^0 p dz)`.
    pub fn ln_n0(&self) -> Complex<T> {
        self.ln_n0
    }

    /// `ln n₁`, `n₁ = exp((i/h) ∫_{z1}^0 p dz)`.
    pub fn ln_n1(&self) -> Complex<T> {
        self.ln_n1
    }

    /// Seeds for lattice solutions are taken where `|Re z| ≥` this value.
    pub fn seed_depth(&self) -> T {
        self.problem.strip().d_x * T::lit(SEED_DEPTH_FRACTION)
    }

    /// `RA(z) = ∫₀ᶻ (p - i ln(-ζ)) dζ`.
    pub fn regularized_action(&self, z: Complex<T>) -> Result<Complex<T>> {
        regularized_action_with(&self.reg, z, None, &self.quad)
    }

    fn off_cut(&self, z: Complex<T>) -> Result<()> {
        if z.im == T::zero() && z.re >= T::zero() {
            return Err(Error::InvalidArgument("point lies on the cut [0, ∞)".into()));
        }
        Ok(())
    }

    fn off_negative_axis(&self, z: Complex<T>) -> Result<()> {
        if z.im == T::zero() && z.re <= T::zero() {
            return Err(Error::InvalidArgument("point lies on (-∞, 0]".into()));
        }
        Ok(())
    }

    /// `∫_{z0}^z p dζ` on `S'`.
    pub fn action_from_z0(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_cut(z)?;
        let i = im_unit::<T>();
        Ok(self.regularized_action(z)? - self.ra_z0 + i * (log_primitive(z) - log_primitive(self.z0)))
    }

    /// `∫_{z0}^z p_up dζ`, the branch continued from `S' ∩ ℂ₊` across `ℝ₊`.
    pub fn action_up_from_z0(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_negative_axis(z)?;
        let i = im_unit::<T>();
        Ok(self.regularized_action(z)? - self.ra_z0 + up_primitive(z) - i * log_primitive(self.z0))
    }

    /// `∫_{z1}^z p dζ` for the momentum of `φ` (equal to `p_up` off `ℝ₋`).
    pub fn action_from_z1(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_negative_axis(z)?;
        Ok(self.regularized_action(z)? - self.ra_z1 + up_primitive(z) - up_primitive(self.z1))
    }

    /// `∫₀ᶻ p dζ` on `S'`.
    pub fn action_from_origin(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_cut(z)?;
        Ok(self.regularized_action(z)? + im_unit::<T>() * log_primitive(z))
    }

    /// Standard behaviour `exp((i/h) ∫_{z0}^z p) / √(sin p)` on `S'`.
    pub fn wkb_leading(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let i = im_unit::<T>();
        let s = self.reg.sqrt_sin(z)?;
        Ok(LogValue::from_log(i / self.h * self.action_from_z0(z)? - s.ln()))
    }

    /// Standard behaviour of `f₊`: `exp((i/h) ∫₀ᶻ p) / √(sin p)` on `S'`.
    pub fn f_plus_standard(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let i = im_unit::<T>();
        let s = self.reg.sqrt_sin(z)?;
        Ok(LogValue::from_log(i / self.h * self.action_from_origin(z)? - s.ln()))
    }

    /// Standard behaviour of `f₋`: `exp(-(i/h) ∫₀ᶻ p) / √(sin p)` on `S'`.
    pub fn f_minus_standard(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let i = im_unit::<T>();
        let s = self.reg.sqrt_sin(z)?;
        Ok(LogValue::from_log(-i / self.h * self.action_from_origin(z)? - s.ln()))
    }

    /// Standard behaviour of `φ`: `exp(-(i/h) ∫_{z1}^z p) / √(sin p)` on
    /// `S ∖ ℝ₋`, with `p` and `√(sin p)` agreeing with `S'` in `ℂ₊`.
    pub fn phi_standard(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let i = im_unit::<T>();
        let s = self.reg.sqrt_sin_up(z)?;
        Ok(LogValue::from_log(-i / self.h * self.action_from_z1(z)? - s.ln()))
    }

    fn half_ln_h_over_2pi(&self) -> T {
        (self.h / two_pi::<T>()).ln() * T::lit(0.5)
    }

    /// `G₀(z) = √(h/2π) / √(-z sin p) · exp((z/h) ln(1/h) + (i/h) RA(z))`,
    /// analytic and zero-free on the strip.
    pub fn g0(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let rs = self.reg.sample(z)?;
        let i = im_unit::<T>();
        let ra = self.regularized_action(z)?;
        let ln_inv_h = -self.h.ln();
        Ok(LogValue::from_log(
            real(self.half_ln_h_over_2pi()) - rs.sqrt_t.ln() + z * (ln_inv_h / self.h) + i / self.h * ra,
        ))
    }

    /// `G₁(z) = √(h/2π) / √(z sin p) · exp(-(z/h) ln(1/h) - (i/h) ∫₀ᶻ (p - i ln ζ))`
    /// with the momentum of `φ`; analytic on the strip.
    pub fn g1(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let rs = self.reg.sample(z)?;
        let i = im_unit::<T>();
        let ra = self.regularized_action(z)?;
        let ln_inv_h = -self.h.ln();
        // √(z sin p) = i √T and p - i ln ζ = q + π for this branch
        Ok(LogValue::from_log(
            real(self.half_ln_h_over_2pi()) - (i * rs.sqrt_t).ln() - z * (ln_inv_h / self.h)
                - i / self.h * (ra + z * T::PI()),
        ))
    }

    /// `G̃₀(z) = i √(h/2π) / √(z sin p_up) · exp((z/h) ln(1/h) + (i/h) ∫₀ᶻ (p_up - i ln ζ - π))`
    /// evaluated independently of [`AsymptoticModel::g0`]: `p_up` is
    /// continued numerically from `z0` through `ℂ₊`, and the integral is
    /// computed by quadrature of `p_up` itself. `z` must lie off `(-∞, 0]`.
    pub fn g0_tilde(&self, z: Complex<T>) -> Result<LogValue<T>> {
        self.off_negative_axis(z)?;
        let strip = self.problem.strip();
        let eta = strip.d_y * T::lit(0.5);
        let mut via = vec![Complex::new(self.z0.re, eta)];
        if z.im < T::zero() && z.re <= T::zero() {
            let cross = strip.d_x * T::lit(0.5);
            via.push(Complex::new(cross, eta));
            via.push(Complex::new(cross, z.im));
        } else {
            via.push(Complex::new(z.re, eta));
        }
        let at_z = self.branch.at_via(&via, z)?;
        let rho = z * T::lit(1e-6);
        let samples = self.branch.track_segment(at_z, rho, self.branch.options().max_step)?;
        let inward = integrate_tracked(&self.branch, &samples, &self.quad)?;
        let p_rho = samples.last().unwrap().p;
        let i = im_unit::<T>();
        let q_rho = p_rho - i * rho.ln() - real(T::PI());
        let integral = -inward - (up_primitive(z) - up_primitive(rho)) + rho * q_rho;
        let ln_inv_h = -self.h.ln();
        let root = z.sqrt() * at_z.sqrt_sin;
        Ok(LogValue::from_log(
            Complex::new(self.half_ln_h_over_2pi(), T::FRAC_PI_2()) - root.ln()
                + z * (ln_inv_h / self.h)
                + i / self.h * integral,
        ))
    }

    /// The uniform law `ψ(z) ≈ Γ(1 - z/h) G₀(z) n₀`, without the `o(1)`.
    pub fn psi_uniform(&self, z: Complex<T>) -> Result<LogValue<T>> {
        Ok(self.f_plus(z)? * LogValue::from_log(self.ln_n0))
    }

    /// `f₊ = ψ / n₀ ≈ Γ(1 - z/h) G₀(z)`.
    pub fn f_plus(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let lg = ln_gamma_one_minus(z / self.h)?;
        Ok(LogValue::from_log(lg) * self.g0(z)?)
    }

    /// `φ ≈ Γ(1 + z/h) G₁(z) / n₁`, normalised like [`Self::phi_standard`].
    pub fn phi(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let lg = ln_gamma(real(T::one()) + z / self.h)?;
        Ok(LogValue::from_log(lg - self.ln_n1) * self.g1(z)?)
    }

    /// `f₋ = n₁ (1 - e^{2πiz/h}) φ ≈ -2πi (z/h) e^{iπz/h} G₁(z) / Γ(1 - z/h)`,
    /// an entire-in-`z/h` form with simple zeros on `hℕ ∪ {0}`.
    pub fn f_minus(&self, z: Complex<T>) -> Result<LogValue<T>> {
        let zeta = z / self.h;
        if zeta.norm() == T::zero() {
            return Ok(LogValue::zero());
        }
        let inv_gamma = match ln_gamma_one_minus(zeta) {
            Ok(l) => LogValue::from_log(-l),
            Err(Error::PoleOfGamma { .. }) | Err(Error::IntegerArgument { .. }) => return Ok(LogValue::zero()),
            Err(e) => return Err(e),
        };
        let i = im_unit::<T>();
        let pref = (-i * zeta * two_pi::<T>()).ln() + i * zeta * T::PI();
        Ok(LogValue::from_log(pref) * self.g1(z)? * inv_gamma)
    }

    /// The near-`ℝ₊` form
    /// `exp((i/h) ∫_{z0}^z p_up) / ((1 - e^{2πiz/h}) √(sin p_up))`.
    pub fn psi_near_rplus(&self, z: Complex<T>) -> Result<LogValue<T>> {
        self.off_negative_axis(z)?;
        let i = im_unit::<T>();
        let x = i * z * (two_pi::<T>() / self.h);
        let one_minus = real(T::one()) - x.exp();
        if x.re < T::lit(1.0) && one_minus.norm() < T::lit(1e-12) {
            return Err(Error::PeriodicZero { z: to_c64(z) });
        }
        let s = self.reg.sqrt_sin_up(z)?;
        Ok(LogValue::from_log(i / self.h * self.action_up_from_z0(z)? - ln_one_minus_exp(x) - s.ln()))
    }

    /// Relative mismatch `|1 - exp(a - b)|` between `ln n₀` from the closed
    /// form and from the numerical action cache (continuation quadrature
    /// along `ℝ₋` to `-ρ`, regularised tail from `-ρ` to 0).
    pub fn n0_consistency(&self) -> Result<T> {
        let rho = self.z0.re.abs() * T::lit(0.05);
        let tail_point = real(-rho);
        let (head, _) = self.action.integral_to(tail_point)?;
        let i = im_unit::<T>();
        let tail = -self.regularized_action(tail_point)? - i * log_primitive(tail_point);
        let via_cache = i / self.h * (head + tail);
        Ok(LogValue::from_log(via_cache).rel_diff(LogValue::from_log(self.ln_n0)))
    }
}

/// Standard behaviour `exp(ip(z - anchor)/h) / √(sin p)` for a constant
/// coefficient, with `p` from the branch convention `Im p < 0`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantWkb<T> {
    pub p: Complex<T>,
    pub sqrt_sin: Complex<T>,
    pub h: T,
    pub anchor: Complex<T>,
}

impl<T: Real> ConstantWkb<T> {
    pub fn new(w: Complex<T>, h: T, anchor: Complex<T>) -> Result<Self> {
        let b = branch_at(crate::potential::ConstantCoefficient(w), anchor)?;
        Ok(ConstantWkb { p: b.base_value(), sqrt_sin: b.base().sqrt_sin, h, anchor })
    }

    pub fn value(&self, z: Complex<T>) -> LogValue<T> {
        let i = im_unit::<T>();
        LogValue::from_log(i * self.p * (z - self.anchor) / self.h - self.sqrt_sin.ln())
    }
}
