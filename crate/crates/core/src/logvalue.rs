//! Complex numbers stored through their logarithm.
//!
//! Solutions of the difference equation and the Gamma factor grow like
//! `exp(C / h)`; every comparison between them is done on logarithms so that
//! magnitudes far outside the `f64` range remain usable. Phases are only
//! meaningful modulo `2π`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::{real, Real};

/// The value `exp(self.log())`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue<T>(Complex<T>);

impl<T: Real> LogValue<T> {
    #[inline]
    pub fn from_log(log: Complex<T>) -> Self {
        LogValue(log)
    }

    /// Logarithm of a finite complex number; zero maps to [`LogValue::zero`].
    pub fn from_complex(z: Complex<T>) -> Self {
        if z.re == T::zero() && z.im == T::zero() {
            Self::zero()
        } else {
            LogValue(z.ln())
        }
    }

    pub fn zero() -> Self {
        LogValue(Complex::new(T::neg_infinity(), T::zero()))
    }

    pub fn one() -> Self {
        LogValue(Complex::new(T::zero(), T::zero()))
    }

    #[inline]
    pub fn log(self) -> Complex<T> {
        self.0
    }

    #[inline]
    pub fn ln_abs(self) -> T {
        self.0.re
    }

    #[inline]
    pub fn phase(self) -> T {
        self.0.im
    }

    pub fn is_zero(self) -> bool {
        self.0.re == T::neg_infinity()
    }

    /// The represented number; overflows to infinity when out of range.
    pub fn to_complex(self) -> Complex<T> {
        if self.is_zero() {
            return Complex::new(T::zero(), T::zero());
        }
        Complex::from_polar(self.0.re.exp(), self.0.im)
    }

    pub fn recip(self) -> Self {
        LogValue(-self.0)
    }

    /// Multiplies by a plain complex factor.
    pub fn scale(self, factor: Complex<T>) -> Self {
        self * LogValue::from_complex(factor)
    }

    /// `|self / other - 1|`, evaluated without forming either value.
    pub fn rel_diff(self, other: Self) -> T {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => T::zero(),
            (true, false) => T::one(),
            (false, true) => T::infinity(),
            (false, false) => {
                let d = self.0 - other.0;
                (d.exp() - real(T::one())).norm()
            }
        }
    }
}

impl<T: Real> Add for LogValue<T> {
    type Output = Self;
    /// Formed relative to the larger term.
    fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.0.re >= other.0.re { (self, other) } else { (other, self) };
        let sum = real(T::one()) + (small.0 - big.0).exp();
        // cancellation below roundoff
        if sum.norm() <= T::lit(8.0) * T::epsilon() {
            return Self::zero();
        }
        LogValue(big.0 + sum.ln())
    }
}

impl<T: Real> Sub for LogValue<T> {
    type Output = Self;
    fn sub(self, other: Self) -> Self {
        self + (-other)
    }
}

impl<T: Real> Mul for LogValue<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        LogValue(self.0 + rhs.0)
    }
}

impl<T: Real> Div for LogValue<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        LogValue(self.0 - rhs.0)
    }
}

impl<T: Real> Neg for LogValue<T> {
    type Output = Self;
    fn neg(self) -> Self {
        LogValue(self.0 + Complex::new(T::zero(), T::PI()))
    }
}

/// `ln(1 - exp(x))`, stable when `Re x` is large and positive.
pub fn ln_one_minus_exp<T: Real>(x: Complex<T>) -> Complex<T> {
    let one = real(T::one());
    if x.re > T::zero() {
        // 1 - e^x = -e^x (1 - e^{-x})
        x + ((-x).exp() - one).ln()
    } else {
        (one - x.exp()).ln()
    }
}
