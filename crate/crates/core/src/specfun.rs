//! Complex Gamma function, its leading Stirling term on sectors, and the
//! reflection formula.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{real, to_c64, two_pi, Real};

const BERNOULLI: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Below this modulus the argument is shifted up before applying the
/// Stirling series.
const STIRLING_RADIUS: f64 = 15.0;

const INTEGER_TOL: f64 = 1e-12;

fn near_integer<T: Real>(z: Complex<T>) -> Option<T> {
    let n = z.re.round();
    if (z - real(n)).norm() < T::lit(INTEGER_TOL) {
        Some(n)
    } else {
        None
    }
}

fn stirling_series<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let mut acc = (z - real(half)) * z.ln() - z + real(half * two_pi::<T>().ln());
    let z2 = z * z;
    let mut zp = z;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let n = 2 * (k + 1);
        acc = acc + zp.inv() * T::lit(b / (n * (n - 1)) as f64);
        zp = zp * z2;
    }
    acc
}

/// `ln sin(πz)`, stable for large `|Im z|`. The imaginary part is
/// determined only modulo `2π`.
pub fn ln_sin_pi<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    let m = z.re.round();
    let f = z - real(m);
    let i = Complex::new(T::zero(), T::one());
    let parity = Complex::new(T::zero(), pi * (m % T::lit(2.0)));
    let core = if f.im > T::one() {
        // sin(πf) = (i/2) e^{-iπf} (1 - e^{2πif})
        -i * f * pi + Complex::new(T::lit(0.5), T::zero()).ln() + Complex::new(T::zero(), pi * T::lit(0.5))
            + (real(T::one()) - (i * f * two_pi::<T>()).exp()).ln()
    } else if f.im < -T::one() {
        // sin(πf) = e^{iπf} (1 - e^{-2πif}) / (2i)
        i * f * pi - Complex::new(T::lit(2.0), T::zero()).ln() - Complex::new(T::zero(), pi * T::lit(0.5))
            + (real(T::one()) - (-i * f * two_pi::<T>()).exp()).ln()
    } else {
        (f * pi).sin().ln()
    };
    core + parity
}

/// `ln Γ(z)`; the imaginary part is determined only modulo `2π`.
pub fn ln_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if z.re < T::lit(0.5) {
        if let Some(n) = near_integer(z) {
            if n <= T::zero() {
                return Err(Error::PoleOfGamma { z: to_c64(z) });
            }
        }
        let one_minus = real(T::one()) - z;
        return Ok(real(T::PI().ln()) - ln_sin_pi(z) - ln_gamma(one_minus)?);
    }
    let radius = T::lit(STIRLING_RADIUS);
    let mut shifted = z;
    let mut correction = real(T::zero());
    while shifted.norm() < radius {
        correction = correction + shifted.ln();
        shifted = shifted + real(T::one());
    }
    Ok(stirling_series(shifted) - correction)
}

/// `Γ(ζ)`.
pub fn gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if let Some(n) = near_integer(z) {
        if n <= T::zero() {
            return Err(Error::PoleOfGamma { z: to_c64(z) });
        }
    }
    Ok(ln_gamma(z)?.exp())
}

/// Half-gap of the sector `|arg ζ| ≤ π - ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSpec<T> {
    epsilon: T,
}

impl<T: Real> SectorSpec<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon < T::PI()) {
            return Err(Error::InvalidArgument("sector gap must lie in (0, π)".into()));
        }
        Ok(SectorSpec { epsilon })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn contains(&self, z: Complex<T>) -> bool {
        z.arg().abs() <= T::PI() - self.epsilon
    }
}

/// Logarithm of the leading Stirling term `√(2πζ) e^{ζ(ln ζ - 1)}` for
/// `Γ(1 + ζ)`, principal branches.
pub fn ln_stirling_sector<T: Real>(z: Complex<T>, sector: &SectorSpec<T>) -> Result<Complex<T>> {
    if !sector.contains(z) || z.norm() == T::zero() {
        return Err(Error::OutsideSector { arg: z.arg().as_f64(), epsilon: sector.epsilon.as_f64() });
    }
    let ln_z = z.ln();
    let half = T::lit(0.5);
    Ok(real(half * two_pi::<T>().ln()) + ln_z * half + z * (ln_z - real(T::one())))
}

/// The leading Stirling term `√(2πζ) e^{ζ(ln ζ - 1)}` for `Γ(1 + ζ)`.
pub fn stirling_sector<T: Real>(z: Complex<T>, sector: &SectorSpec<T>) -> Result<Complex<T>> {
    Ok(ln_stirling_sector(z, sector)?.exp())
}

/// `ln Γ(1 - ζ)` through `π / (sin(πζ) Γ(ζ))`.
pub fn ln_reflection<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if near_integer(z).is_some() {
        return Err(Error::IntegerArgument { z: to_c64(z) });
    }
    Ok(real(T::PI().ln()) - ln_sin_pi(z) - ln_gamma(z)?)
}

/// `Γ(1 - ζ) = π / (sin(πζ) Γ(ζ))`. This is the route used for `Γ(1 - z/h)`
/// when `Re z > h/2`, where `1 - z/h` sits far out on the negative axis.
pub fn reflection<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    Ok(ln_reflection(z)?.exp())
}

/// `ln Γ(1 - ζ)`, by reflection for `Re ζ > 1/2` and directly otherwise.
pub fn ln_gamma_one_minus<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if z.re > T::lit(0.5) {
        if let Some(n) = near_integer(z) {
            if n >= T::one() {
                return Err(Error::PoleOfGamma { z: to_c64(real(T::one()) - z) });
            }
        }
        ln_reflection(z)
    } else {
        ln_gamma(real(T::one()) - z)
    }
}
