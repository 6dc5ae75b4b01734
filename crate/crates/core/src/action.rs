//! Action integrals `∫ p dζ` along polylines, the pole-regularised action
//! `∫₀ᶻ (p - i ln(-ζ)) dζ`, and the canonical-curve test.

use std::sync::Mutex;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::momentum::{nearest_root, MomentumBranch, MomentumSample, PathPolyline, RegularizedMomentum};
use crate::potential::Coefficient;
use crate::quadrature::{integrate, integrate_segment, QuadratureOptions};
use crate::scalar::{real, Real};

/// Integral of the branch over one straight segment, given the samples a
/// continuation produced along it (first and last are the endpoints). At each quadrature node the root nearest to the linear
/// interpolation of the neighbouring samples is used.
pub fn integrate_tracked<T: Real, C: Coefficient<T>>(
    branch: &MomentumBranch<T, C>,
    samples: &[MomentumSample<T>],
    opts: &QuadratureOptions<T>,
) -> Result<Complex<T>> {
    let a = samples[0].z;
    let b = samples[samples.len() - 1].z;
    let len = (b - a).norm();
    if len == T::zero() {
        return Ok(real(T::zero()));
    }
    let ts: Vec<T> = samples.iter().map(|s| (s.z - a).norm() / len).collect();
    let dz = b - a;
    let coef = branch.coefficient();
    let inner = integrate(
        |t: T| {
            let j = match ts.binary_search_by(|x| x.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less)) {
                Ok(j) => return Ok(samples[j].p),
                Err(j) => j.clamp(1, ts.len() - 1),
            };
            let (t0, t1) = (ts[j - 1], ts[j]);
            let f = (t - t0) / (t1 - t0);
            let reference = samples[j - 1].p * (T::one() - f) + samples[j].p * f;
            let w = coef.w(a + dz * t)?;
            Ok(nearest_root(w, reference).0)
        },
        T::zero(),
        T::one(),
        opts,
    )?;
    Ok(inner * dz)
}

/// `∫ p dζ` along `path`, with `p` continued from the branch base point
/// (via a straight segment to the path start when they differ). Returns
/// the integral and the branch sample at the path end.
pub fn integrate_p_sampled<T: Real, C: Coefficient<T>>(
    branch: &MomentumBranch<T, C>,
    path: &PathPolyline<T>,
    opts: &QuadratureOptions<T>,
) -> Result<(Complex<T>, MomentumSample<T>)> {
    let max_step = path.max_step();
    let mut cur = if path.start() == branch.base_point() {
        branch.base()
    } else {
        *branch
            .track_segment(branch.base(), path.start(), max_step)?
            .last()
            .unwrap()
    };
    let mut total = real(T::zero());
    for v in &path.vertices()[1..] {
        let samples = branch.track_segment(cur, *v, max_step)?;
        total = total + integrate_tracked(branch, &samples, opts)?;
        cur = *samples.last().unwrap();
    }
    Ok((total, cur))
}

/// `∫ p dζ` along `path`.
pub fn integrate_p<T: Real, C: Coefficient<T>>(
    branch: &MomentumBranch<T, C>,
    path: &PathPolyline<T>,
) -> Result<Complex<T>> {
    Ok(integrate_p_sampled(branch, path, &QuadratureOptions::default())?.0)
}

#[derive(Clone, Copy, Debug)]
struct Anchor<T> {
    sample: MomentumSample<T>,
    integral: Complex<T>,
}

/// Accumulated action `∫_{base}^z p dζ` from the branch base point, with
/// memoised anchor points.
///
/// A new point reuses the nearest anchor at the same height (the
/// connecting segment is horizontal); otherwise the branch's default path
/// (vertical, then horizontal) is used and its corner is stored as well.
pub struct ActionCache<T: Real, C: Coefficient<T>> {
    branch: MomentumBranch<T, C>,
    anchors: Mutex<Vec<Anchor<T>>>,
    options: QuadratureOptions<T>,
}

impl<T: Real, C: Coefficient<T>> ActionCache<T, C> {
    pub fn new(branch: MomentumBranch<T, C>) -> Self {
        let base = Anchor { sample: branch.base(), integral: real(T::zero()) };
        ActionCache {
            branch,
            anchors: Mutex::new(vec![base]),
            options: QuadratureOptions::default(),
        }
    }

    pub fn branch(&self) -> &MomentumBranch<T, C> {
        &self.branch
    }

    pub fn origin(&self) -> Complex<T> {
        self.branch.base_point()
    }

    fn lookup(&self, z: Complex<T>) -> Option<Anchor<T>> {
        let anchors = self.anchors.lock().ok()?;
        anchors
            .iter()
            .filter(|a| a.sample.z.im == z.im)
            .min_by(|a, b| {
                (a.sample.z.re - z.re)
                    .abs()
                    .partial_cmp(&(b.sample.z.re - z.re).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .copied()
    }

    fn store(&self, a: Anchor<T>) {
        if let Ok(mut anchors) = self.anchors.lock() {
            anchors.push(a);
        }
    }

    fn extend(&self, from: Anchor<T>, z: Complex<T>) -> Result<Anchor<T>> {
        if from.sample.z == z {
            return Ok(from);
        }
        let samples = self.branch.track_segment(from.sample, z, self.branch.options().max_step)?;
        let d = integrate_tracked(&self.branch, &samples, &self.options)?;
        Ok(Anchor { sample: *samples.last().unwrap(), integral: from.integral + d })
    }

    /// `∫_{origin}^z p dζ` and the branch sample at `z`.
    pub fn integral_to(&self, z: Complex<T>) -> Result<(Complex<T>, MomentumSample<T>)> {
        let start = match self.lookup(z) {
            Some(a) => a,
            None => {
                let base = self.anchors.lock().map(|a| a[0]).unwrap_or(Anchor {
                    sample: self.branch.base(),
                    integral: real(T::zero()),
                });
                let corner = Complex::new(base.sample.z.re, z.im);
                let c = self.extend(base, corner)?;
                self.store(c);
                c
            }
        };
        let end = self.extend(start, z)?;
        if end.sample.z != start.sample.z {
            self.store(end);
        }
        Ok((end.integral, end.sample))
    }

    /// `∫_a^b p dζ` along the cached routes.
    pub fn integral_between(&self, a: Complex<T>, b: Complex<T>) -> Result<Complex<T>> {
        Ok(self.integral_to(b)?.0 - self.integral_to(a)?.0)
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.lock().map(|a| a.len()).unwrap_or(0)
    }
}

/// `∫₀ᶻ (p(ζ) - i ln(-ζ)) dζ` along `path` (which must start at 0) or along
/// the straight segment from 0 when `path` is `None`. The integrand is
/// analytic at the origin, so no singular treatment is needed.
pub fn regularized_action<T: Real>(
    reg: &RegularizedMomentum<T>,
    z: Complex<T>,
    path: Option<&PathPolyline<T>>,
) -> Result<Complex<T>> {
    regularized_action_with(reg, z, path, &QuadratureOptions::default())
}

pub fn regularized_action_with<T: Real>(
    reg: &RegularizedMomentum<T>,
    z: Complex<T>,
    path: Option<&PathPolyline<T>>,
    opts: &QuadratureOptions<T>,
) -> Result<Complex<T>> {
    let zero = real(T::zero());
    let vertices: Vec<Complex<T>> = match path {
        Some(p) => {
            if p.start() != zero || p.end() != z {
                return Err(Error::InvalidArgument("path must run from 0 to z".into()));
            }
            p.vertices().to_vec()
        }
        None => {
            if z == zero {
                return Ok(zero);
            }
            vec![zero, z]
        }
    };
    let mut total = zero;
    for w in vertices.windows(2) {
        total = total + integrate_segment(|_, zeta| reg.q(zeta), w[0], w[1], opts)?;
    }
    Ok(total)
}

/// Closed-form primitive `ζ ln(-ζ) - ζ` of `ln(-ζ)`, cut along `ℝ₊`,
/// continuous at 0.
pub fn log_primitive<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() == T::zero() {
        return z;
    }
    z * (-z).ln() - z
}

/// Outcome of [`canonicity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicityReport<T> {
    pub canonical: bool,
    /// `min d/dy Im ∫ p dζ` over the samples; must be positive.
    pub margin_p: T,
    /// `min -d/dy Im ∫ (p - π) dζ`; must be positive.
    pub margin_p_minus_pi: T,
    /// Height of the sample with the smallest slack.
    pub worst_y: T,
}

/// Checks that the vertical polyline `curve` is canonical for `branch`:
/// along it `Im ∫ p dζ` increases and `Im ∫ (p - π) dζ` decreases with
/// `y = Im z`. At corners both one-sided derivatives are checked.
pub fn canonicity<T: Real, C: Coefficient<T>>(
    curve: &PathPolyline<T>,
    branch: &MomentumBranch<T, C>,
) -> Result<CanonicityReport<T>> {
    let v = curve.vertices();
    for (i, w) in v.windows(2).enumerate() {
        if !(w[1].im > w[0].im) {
            return Err(Error::NotVertical { index: i + 1 });
        }
    }
    let mut cur = branch.at(curve.start())?;
    let mut report = CanonicityReport {
        canonical: true,
        margin_p: T::infinity(),
        margin_p_minus_pi: T::infinity(),
        worst_y: curve.start().im,
    };
    let mut worst = T::infinity();
    for w in v.windows(2) {
        let slope = (w[1] - w[0]) / (w[1].im - w[0].im);
        let samples = branch.track_segment(cur, w[1], curve.max_step())?;
        for s in &samples {
            let d1 = (s.p * slope).im;
            let d2 = -((s.p - real(T::PI())) * slope).im;
            report.margin_p = report.margin_p.min(d1);
            report.margin_p_minus_pi = report.margin_p_minus_pi.min(d2);
            if d1.min(d2) < worst {
                worst = d1.min(d2);
                report.worst_y = s.z.im;
            }
        }
        cur = *samples.last().unwrap();
    }
    report.canonical = report.margin_p > T::zero() && report.margin_p_minus_pi > T::zero();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentum::branch_at;
    use crate::potential::{ConstantCoefficient, MeromorphicPotential, SpectralProblem, Strip};
    use num_complex::Complex64;
    use std::collections::HashMap;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn problem(expr: &str, d: f64) -> SpectralProblem<f64> {
        let v = MeromorphicPotential::parse(expr, &HashMap::new()).unwrap();
        SpectralProblem::new(v, c(0.0, 0.0), Strip::new(d, d).unwrap()).unwrap()
    }

    #[test]
    fn constant_momentum_integral() {
        let b = branch_at(ConstantCoefficient(c(5.0, 0.0)), c(0.0, 0.0)).unwrap();
        let path = PathPolyline::new(vec![c(0.1, 0.0), c(0.4, 0.3)], 0.05).unwrap();
        let v = integrate_p(&b, &path).unwrap();
        assert!((v - b.base_value() * c(0.3, 0.3)).norm() < 1e-13);
    }

    #[test]
    fn closed_loop_integral_vanishes() {
        let b = branch_at(problem("1/z + 0.3*z", 0.35), c(-0.25, 0.0)).unwrap();
        let pts = [c(-0.25, 0.0), c(-0.1, 0.1), c(0.2, 0.25), c(-0.3, 0.3), c(-0.25, 0.0)];
        let path = PathPolyline::through(&pts, 0.02).unwrap();
        assert!(integrate_p(&b, &path).unwrap().norm() < 1e-10);
    }

    #[test]
    fn segment_matches_composite_oracle() {
        // For v = 1/z on ℝ₋, p = -i arccosh(-1/(2x)) in closed form.
        let b = branch_at(problem("1/z", 0.4), c(-0.3, 0.0)).unwrap();
        let path = PathPolyline::new(vec![c(-0.3, 0.0), c(-0.2, 0.0)], 0.01).unwrap();
        let v = integrate_p(&b, &path).unwrap();
        let p = |x: f64| -(-1.0 / (2.0 * x)).acosh();
        let n = 10_000;
        let (a, bb) = (-0.3, -0.2);
        let hstep = (bb - a) / n as f64;
        // composite Simpson
        let mut acc = p(a) + p(bb);
        for k in 1..n {
            let x = a + k as f64 * hstep;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * p(x);
        }
        let oracle = acc * hstep / 3.0;
        assert!(v.re.abs() < 1e-14);
        assert!((v.im - oracle).abs() < 1e-10);
    }

    #[test]
    fn cache_agrees_with_fresh_quadrature() {
        let b = branch_at(problem("1/z + 0.3*z", 0.35), c(-0.25, 0.0)).unwrap();
        let cache = ActionCache::new(b.clone());
        let z1 = c(0.1, 0.1);
        let z2 = c(0.25, 0.1);
        let (i1, _) = cache.integral_to(z1).unwrap();
        let (i2, _) = cache.integral_to(z2).unwrap();
        let fresh = integrate_p(&b, &PathPolyline::through(&[c(-0.25, 0.0), c(0.0, 0.3), z2], 0.02).unwrap()).unwrap();
        assert!((i2 - fresh).norm() < 1e-10);
        let seg = integrate_p(&b.rebased(b.at(z1).unwrap()), &PathPolyline::new(vec![z1, z2], 0.02).unwrap()).unwrap();
        assert!((i2 - i1 - seg).norm() < 1e-10);
        assert!(cache.anchor_count() >= 3);
    }

    #[test]
    fn regularized_action_examples() {
        let sp = problem("1/z + 0.3*z", 0.35);
        let b = branch_at(sp, c(-0.25, 0.0)).unwrap();
        let reg = RegularizedMomentum::new(&b).unwrap();
        assert_eq!(regularized_action(&reg, c(0.0, 0.0), None).unwrap(), c(0.0, 0.0));

        let z = c(0.2, -0.15);
        let direct = regularized_action(&reg, z, None).unwrap();
        let bent = PathPolyline::through(&[c(0.0, 0.0), c(-0.1, 0.2), z], 0.02).unwrap();
        let other = regularized_action(&reg, z, Some(&bent)).unwrap();
        assert!((direct - other).norm() < 1e-10);

        // derivative at -0.1 equals p(-0.1) - i ln(0.1)
        let z = c(-0.1, 0.0);
        let target = reg.p(z).unwrap() - c(0.0, 1.0) * c(0.1f64.ln(), 0.0);
        for step in [1e-4, 1e-5] {
            let fd = (regularized_action(&reg, z + step, None).unwrap()
                - regularized_action(&reg, z - step, None).unwrap())
                / (2.0 * step);
            assert!((fd - target).norm() < 1e-6, "{step}");
        }
    }

    #[test]
    fn regularized_action_reproduces_integrate_p() {
        let sp = problem("1/z + 0.3*z", 0.35);
        let b = branch_at(sp, c(-0.25, 0.0)).unwrap();
        let reg = RegularizedMomentum::new(&b).unwrap();
        let (a, z) = (c(-0.25, 0.0), c(0.2, 0.15));
        let path = PathPolyline::through(&[a, c(-0.25, 0.15), z], 0.02).unwrap();
        let direct = integrate_p(&b, &path).unwrap();
        let i = c(0.0, 1.0);
        let via = regularized_action(&reg, z, None).unwrap() - regularized_action(&reg, a, None).unwrap()
            + i * (log_primitive(z) - log_primitive(a));
        assert!((direct - via).norm() < 1e-9);
    }

    #[test]
    fn canonicity_examples() {
        let up = |p: Complex64| branch_at(ConstantCoefficient(-p.cos() * 2.0), c(0.0, 0.0)).unwrap();
        let line = PathPolyline::new(vec![c(0.0, -0.2), c(0.0, 0.2)], 0.05).unwrap();
        let r = canonicity(&line, &up(c(PI / 2.0, -1.0))).unwrap();
        assert!(r.canonical);
        assert!((r.margin_p - PI / 2.0).abs() < 1e-12);
        let r = canonicity(&line, &up(c(-PI / 2.0, -1.0))).unwrap();
        assert!(!r.canonical);

        // corner with slopes 1 + i and -1 + i: for p = π/2 - 2i the
        // straight line is canonical but the first piece fails.
        let corner = PathPolyline::new(vec![c(0.0, -0.2), c(0.2, 0.0), c(0.0, 0.2)], 0.05).unwrap();
        assert!(canonicity(&line, &up(c(PI / 2.0, -2.0))).unwrap().canonical);
        let r = canonicity(&corner, &up(c(PI / 2.0, -2.0))).unwrap();
        assert!(!r.canonical);
        assert!((r.margin_p - (PI / 2.0 - 2.0)).abs() < 1e-12);

        let bad = PathPolyline::new(vec![c(0.0, 0.2), c(0.0, -0.2)], 0.05).unwrap();
        assert!(matches!(canonicity(&bad, &up(c(PI / 2.0, -1.0))), Err(Error::NotVertical { .. })));
    }
}
