//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands on
//! a real parameter interval, plus a helper for straight complex segments.

#![allow(clippy::excessive_precision)]

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions<T> {
    /// Absolute tolerance on the whole interval.
    pub abs_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadratureOptions<T> {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: T::lit(1e-13),
            max_subdivisions: 200,
        }
    }
}

struct Piece<T> {
    a: T,
    b: T,
    value: Complex<T>,
    error: T,
    abs_value: T,
}

fn kronrod_piece<T, F>(f: &mut F, a: T, b: T) -> Result<Piece<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center)?;
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    let mut abs_sum = fc.norm() * T::lit(WGK[7]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        let s = f1 + f2;
        kronrod = kronrod + s * T::lit(WGK[j]);
        abs_sum = abs_sum + (f1.norm() + f2.norm()) * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    let len = half.abs();
    let raw = ((kronrod - gauss) * half).norm();
    // QUADPACK-style rescaling of the raw Gauss/Kronrod difference
    let asc = abs_sum * len;
    let mut error = raw;
    if asc > T::zero() && raw > T::zero() {
        let scale = (T::lit(200.0) * raw / asc).powf(T::lit(1.5));
        error = if scale < T::one() { asc * scale } else { asc };
        error = error.max(raw.min(asc) * T::lit(1e-3));
    }
    Ok(Piece {
        a,
        b,
        value: kronrod * half,
        error,
        abs_value: asc,
    })
}

/// Integrates `f` over `[a, b]`, bisecting the worst piece until the summed
/// error estimate drops below `abs_tol` (or the roundoff floor).
pub fn integrate<T, F>(mut f: F, a: T, b: T, opts: &QuadratureOptions<T>) -> Result<Complex<T>>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    if a == b {
        return Ok(real(T::zero()));
    }
    let mut pieces = vec![kronrod_piece(&mut f, a, b)?];
    loop {
        let total_err = pieces.iter().fold(T::zero(), |acc, p| acc + p.error);
        let abs_total = pieces.iter().fold(T::zero(), |acc, p| acc + p.abs_value);
        let floor = T::lit(64.0) * T::epsilon() * abs_total;
        if total_err <= opts.abs_tol.max(floor) {
            break;
        }
        if pieces.len() >= opts.max_subdivisions {
            return Err(Error::QuadratureFailure {
                a: a.as_f64(),
                b: b.as_f64(),
                estimate: total_err.as_f64(),
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| {
                if p.error > be {
                    (i, p.error)
                } else {
                    (bi, be)
                }
            });
        let piece = pieces.swap_remove(worst);
        let mid = (piece.a + piece.b) * T::lit(0.5);
        pieces.push(kronrod_piece(&mut f, piece.a, mid)?);
        pieces.push(kronrod_piece(&mut f, mid, piece.b)?);
    }
    Ok(pieces
        .iter()
        .fold(real(T::zero()), |acc, p| acc + p.value))
}

/// `∫ g(ζ) dζ` along the straight segment from `za` to `zb`. The closure
/// receives the segment parameter `t ∈ [0, 1]` together with the point.
pub fn integrate_segment<T, F>(
    mut g: F,
    za: Complex<T>,
    zb: Complex<T>,
    opts: &QuadratureOptions<T>,
) -> Result<Complex<T>>
where
    T: Real,
    F: FnMut(T, Complex<T>) -> Result<Complex<T>>,
{
    let dz = zb - za;
    let inner = integrate(|t| g(t, za + dz * t), T::zero(), T::one(), opts)?;
    Ok(inner * dz)
}
