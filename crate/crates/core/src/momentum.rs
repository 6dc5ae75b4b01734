//! Branches of the complex momentum `p`, defined by `2 cos p + w(z) = 0`.
//!
//! On the cut strip `S' = S ∖ ℝ₊` the branch with `Im p < 0` is used. It is
//! carried along paths by a predictor–corrector continuation
//! ([`MomentumBranch`]); near the pole a closed-form regularisation is
//! available for [`SpectralProblem`] coefficients ([`RegularizedMomentum`]).

use std::sync::{Arc, Mutex};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::potential::{Coefficient, SpectralProblem};
use crate::scalar::{im_unit, real, to_c64, two_pi, Real};

/// Roots of `X² + wX + 1 = 0`, larger modulus first. `e^{ip}` is one of
/// them and `Im p < 0` selects the first.
pub fn multipliers<T: Real>(w: Complex<T>) -> (Complex<T>, Complex<T>) {
    let d = (w * w - T::lit(4.0)).sqrt();
    let a = -w + d;
    let b = -w - d;
    let big = if a.norm() >= b.norm() { a } else { b } * T::lit(0.5);
    (big, big.inv())
}

/// `p` with `Im p < 0` and `Re p ∈ (-π, π]` for a given value of `w`.
pub fn momentum_from_w<T: Real>(w: Complex<T>) -> Result<Complex<T>> {
    let two = T::lit(2.0);
    if (w - two).norm() < T::lit(1e-10) || (w + two).norm() < T::lit(1e-10) {
        return Err(Error::TurningPoint { z: to_c64(w) });
    }
    let (big, _) = multipliers(w);
    if big.norm().ln() <= T::lit(1e-12) {
        return Err(Error::AmbiguousBranch { z: to_c64(w) });
    }
    let p = -im_unit::<T>() * big.ln();
    // a negative-zero imaginary part of `big` would give Re p = -π
    Ok(if p.re <= -T::PI() { p + real(two_pi::<T>()) } else { p })
}

/// `ln z` with the cut along `ℝ₊`, normalised by `ln(-1) = iπ`.
pub fn ln_cut_positive<T: Real>(z: Complex<T>) -> Complex<T> {
    (-z).ln() + Complex::new(T::zero(), T::PI())
}

/// A polyline in the complex plane.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPolyline<T> {
    vertices: Vec<Complex<T>>,
    max_step: T,
}

impl<T: Real> PathPolyline<T> {
    pub fn new(vertices: Vec<Complex<T>>, max_step: T) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two vertices".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("consecutive path vertices coincide".into()));
        }
        if !(max_step > T::zero()) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        Ok(PathPolyline { vertices, max_step })
    }

    /// Builds a path, silently dropping repeated consecutive vertices.
    pub fn through(points: &[Complex<T>], max_step: T) -> Result<Self> {
        let mut v: Vec<Complex<T>> = Vec::with_capacity(points.len());
        for p in points {
            if v.last() != Some(p) {
                v.push(*p);
            }
        }
        if v.len() == 1 {
            v.push(v[0]);
            return Err(Error::InvalidArgument("path collapses to a point".into()));
        }
        Self::new(v, max_step)
    }

    pub fn vertices(&self) -> &[Complex<T>] {
        &self.vertices
    }

    pub fn max_step(&self) -> T {
        self.max_step
    }

    pub fn start(&self) -> Complex<T> {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex<T> {
        *self.vertices.last().unwrap()
    }

    pub fn length(&self) -> T {
        self.vertices
            .windows(2)
            .fold(T::zero(), |acc, w| acc + (w[1] - w[0]).norm())
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        PathPolyline { vertices: v, max_step: self.max_step }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.end() != other.start() {
            return Err(Error::InvalidArgument("joined paths must share an endpoint".into()));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        Ok(PathPolyline { vertices: v, max_step: self.max_step.min(other.max_step) })
    }
}

/// Step-control parameters of the continuation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions<T> {
    pub max_step: T,
    pub min_step: T,
}

impl<T: Real> Default for ContinuationOptions<T> {
    fn default() -> Self {
        ContinuationOptions { max_step: T::lit(0.02), min_step: T::lit(1e-9) }
    }
}

/// One point of a continued branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumSample<T> {
    pub z: Complex<T>,
    pub p: Complex<T>,
    /// The continuously varying square root of `sin p`.
    pub sqrt_sin: Complex<T>,
}

/// Root of `2 cos p + w = 0` nearest to `reference`, with the distances to
/// the nearest and second-nearest candidates.
pub fn nearest_root<T: Real>(w: Complex<T>, reference: Complex<T>) -> (Complex<T>, T, T) {
    let (big, _) = multipliers(w);
    let p1 = -im_unit::<T>() * big.ln();
    let tp = two_pi::<T>();
    let mut best = (p1, T::infinity());
    let mut second = T::infinity();
    for s in [T::one(), -T::one()] {
        let base = p1 * s;
        let m0 = ((reference - base).re / tp).round();
        for dm in [-1.0, 0.0, 1.0] {
            let cand = base + real((m0 + T::lit(dm)) * tp);
            let d = (cand - reference).norm();
            if d < best.1 {
                second = best.1;
                best = (cand, d);
            } else if d < second {
                second = d;
            }
        }
    }
    (best.0, best.1, second)
}

fn nearest_sign<T: Real>(r: Complex<T>, prev: Complex<T>) -> (Complex<T>, bool) {
    let (a, b) = ((r - prev).norm(), (r + prev).norm());
    if a <= b {
        (r, a < T::lit(0.5) * b)
    } else {
        (-r, b < T::lit(0.5) * a)
    }
}

type CacheEntry<T> = (Vec<Complex<T>>, Arc<Vec<MomentumSample<T>>>);
const CACHE_CAPACITY: usize = 64;

/// A branch of `p` fixed at a base point and continued along paths.
pub struct MomentumBranch<T: Real, C: Coefficient<T>> {
    coef: C,
    base: MomentumSample<T>,
    options: ContinuationOptions<T>,
    cache: Mutex<Vec<CacheEntry<T>>>,
}

impl<T: Real, C: Coefficient<T>> Clone for MomentumBranch<T, C> {
    fn clone(&self) -> Self {
        MomentumBranch {
            coef: self.coef.clone(),
            base: self.base,
            options: self.options,
            cache: Mutex::new(Vec::new()),
        }
    }
}

impl<T: Real, C: Coefficient<T> + std::fmt::Debug> std::fmt::Debug for MomentumBranch<T, C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentumBranch")
            .field("coef", &self.coef)
            .field("base", &self.base)
            .field("options", &self.options)
            .finish()
    }
}

/// Fixes the branch with `Im p < 0`, `Re p ∈ (-π, π]` at `z_ref`.
pub fn branch_at<T: Real, C: Coefficient<T>>(coef: C, z_ref: Complex<T>) -> Result<MomentumBranch<T, C>> {
    MomentumBranch::new(coef, z_ref, ContinuationOptions::default())
}

impl<T: Real, C: Coefficient<T>> MomentumBranch<T, C> {
    pub fn new(coef: C, z_ref: Complex<T>, options: ContinuationOptions<T>) -> Result<Self> {
        coef.check_base(z_ref)?;
        let w = coef.w(z_ref)?;
        let p = momentum_from_w(w).map_err(|e| match e {
            Error::TurningPoint { .. } => Error::TurningPoint { z: to_c64(z_ref) },
            Error::AmbiguousBranch { .. } => Error::AmbiguousBranch { z: to_c64(z_ref) },
            other => other,
        })?;
        Ok(MomentumBranch {
            coef,
            base: MomentumSample { z: z_ref, p, sqrt_sin: p.sin().sqrt() },
            options,
            cache: Mutex::new(Vec::new()),
        })
    }

    pub fn coefficient(&self) -> &C {
        &self.coef
    }

    pub fn base(&self) -> MomentumSample<T> {
        self.base
    }

    pub fn base_point(&self) -> Complex<T> {
        self.base.z
    }

    pub fn base_value(&self) -> Complex<T> {
        self.base.p
    }

    pub fn options(&self) -> ContinuationOptions<T> {
        self.options
    }

    /// The same branch re-based at `sample`, which must come from a
    /// continuation of `self`.
    pub fn rebased(&self, sample: MomentumSample<T>) -> Self {
        MomentumBranch {
            coef: self.coef.clone(),
            base: sample,
            options: self.options,
            cache: Mutex::new(Vec::new()),
        }
    }

    fn try_step(&self, cur: &MomentumSample<T>, znew: Complex<T>) -> Result<Option<MomentumSample<T>>> {
        let w = self.coef.w(znew)?;
        let dw = self.coef.dw(cur.z)?;
        let sin_p = cur.sqrt_sin * cur.sqrt_sin;
        let pred = cur.p + dw / (sin_p * T::lit(2.0)) * (znew - cur.z);
        let (p, d1, d2) = nearest_root(w, pred);
        if !((p - cur.p).norm() < T::FRAC_PI_4()) || !(d1 < T::lit(0.25) * d2) {
            return Ok(None);
        }
        let (s, clear) = nearest_sign(p.sin().sqrt(), cur.sqrt_sin);
        if !clear {
            return Ok(None);
        }
        Ok(Some(MomentumSample { z: znew, p, sqrt_sin: s }))
    }

    fn run_segment(
        &self,
        start: MomentumSample<T>,
        end: Complex<T>,
        max_step: T,
        out: &mut Vec<MomentumSample<T>>,
    ) -> Result<MomentumSample<T>> {
        let total = (end - start.z).norm();
        if total == T::zero() {
            return Ok(start);
        }
        let dir = (end - start.z) / total;
        let mut cur = start;
        let mut s = T::zero();
        let mut step = max_step.min(total);
        while s < total {
            let ds = step.min(total - s);
            let last = s + ds >= total;
            let znew = if last { end } else { start.z + dir * (s + ds) };
            match self.try_step(&cur, znew)? {
                Some(next) => {
                    cur = next;
                    s = if last { total } else { s + ds };
                    out.push(cur);
                    step = (step * T::lit(2.0)).min(max_step);
                }
                None => {
                    step = step * T::lit(0.5);
                    if step < self.options.min_step {
                        return Err(Error::StepCollapse { z: to_c64(cur.z), step: step.as_f64() });
                    }
                }
            }
        }
        Ok(cur)
    }

    /// Samples of the branch along the straight segment from `start` (a
    /// sample of this branch) to `end`, `start` included.
    pub fn track_segment(
        &self,
        start: MomentumSample<T>,
        end: Complex<T>,
        max_step: T,
    ) -> Result<Vec<MomentumSample<T>>> {
        let mut out = vec![start];
        self.run_segment(start, end, max_step.min(self.options.max_step), &mut out)?;
        Ok(out)
    }

    /// Continues the branch from its base point along `path` (a straight
    /// segment from the base to the first vertex is prepended when they
    /// differ). Returns every accepted sample, base point included.
    pub fn continue_along(&self, path: &PathPolyline<T>) -> Result<Arc<Vec<MomentumSample<T>>>> {
        if let Ok(cache) = self.cache.lock() {
            if let Some((_, v)) = cache.iter().find(|(k, _)| k.as_slice() == path.vertices()) {
                return Ok(v.clone());
            }
        }
        let max_step = path.max_step().min(self.options.max_step);
        let mut out = vec![self.base];
        let mut cur = self.base;
        for v in path.vertices() {
            cur = self.run_segment(cur, *v, max_step, &mut out)?;
        }
        let out = Arc::new(out);
        if let Ok(mut cache) = self.cache.lock() {
            if cache.len() >= CACHE_CAPACITY {
                cache.remove(0);
            }
            cache.push((path.vertices().to_vec(), out.clone()));
        }
        Ok(out)
    }

    /// Continues along `path` and returns the final sample.
    pub fn continue_to_end(&self, path: &PathPolyline<T>) -> Result<MomentumSample<T>> {
        let max_step = path.max_step().min(self.options.max_step);
        let mut scratch = Vec::new();
        let mut cur = self.base;
        for v in path.vertices() {
            cur = self.run_segment(cur, *v, max_step, &mut scratch)?;
            scratch.clear();
        }
        Ok(cur)
    }

    /// Default route from the base point: vertical to `Im z`, then
    /// horizontal. From a base on `ℝ₋` this never crosses `ℝ₊`.
    pub fn default_path(&self, z: Complex<T>) -> Vec<Complex<T>> {
        let b = self.base.z;
        let mut v = vec![b];
        let corner = Complex::new(b.re, z.im);
        if corner != b {
            v.push(corner);
        }
        if z != *v.last().unwrap() {
            v.push(z);
        }
        v
    }

    /// The branch continued to `z` along [`MomentumBranch::default_path`].
    pub fn at(&self, z: Complex<T>) -> Result<MomentumSample<T>> {
        let v = self.default_path(z);
        if v.len() == 1 {
            return Ok(self.base);
        }
        let path = PathPolyline::new(v, self.options.max_step)?;
        self.continue_to_end(&path)
    }

    /// Continues to `z` through the given intermediate points.
    pub fn at_via(&self, via: &[Complex<T>], z: Complex<T>) -> Result<MomentumSample<T>> {
        let mut pts = vec![self.base.z];
        pts.extend_from_slice(via);
        pts.push(z);
        let path = PathPolyline::through(&pts, self.options.max_step)?;
        self.continue_to_end(&path)
    }

    /// `√(sin p(z))` continued along the default path.
    pub fn sqrt_sin(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.at(z)?.sqrt_sin)
    }
}

/// The near-pole decomposition `p(z) = i ln z + C + g(z)`, `g(0) = 0`.
pub struct NearPoleDecomposition<T: Real> {
    pub c: Complex<T>,
    /// Successive extrapolants; the last is `c`.
    pub extrapolants: Vec<Complex<T>>,
    branch: MomentumBranch<T, SpectralProblem<T>>,
}

impl<T: Real> NearPoleDecomposition<T> {
    /// `g(z) = p(z) - i ln z - C` with `p` continued from the base point.
    pub fn g(&self, z: Complex<T>) -> Result<Complex<T>> {
        if z.norm() == T::zero() {
            return Ok(real(T::zero()));
        }
        let s = self.branch.at(z)?;
        Ok(s.p - im_unit::<T>() * ln_cut_positive(z) - self.c)
    }

    pub fn branch(&self) -> &MomentumBranch<T, SpectralProblem<T>> {
        &self.branch
    }
}

/// Extrapolates `p(z) - i ln z` to the pole along `z = -t`.
pub fn decompose_near_pole<T: Real>(problem: &SpectralProblem<T>) -> Result<NearPoleDecomposition<T>> {
    decompose_near_pole_on_ray(problem, T::zero())
}

const RICHARDSON_LEVELS: usize = 4;
const RICHARDSON_T0: f64 = 1e-3;

/// As [`decompose_near_pole`] along `z = -t e^{iα}`.
pub fn decompose_near_pole_on_ray<T: Real>(
    problem: &SpectralProblem<T>,
    alpha: T,
) -> Result<NearPoleDecomposition<T>> {
    let base = Complex::new(-problem.strip().d_x * T::lit(0.5), T::zero());
    let branch = branch_at(problem.clone(), base)?;
    let dir = -Complex::from_polar(T::one(), alpha);
    let mut table: Vec<Vec<Complex<T>>> = Vec::new();
    let mut row = Vec::new();
    for j in 0..RICHARDSON_LEVELS {
        let t = T::lit(RICHARDSON_T0 / f64::powi(2.0, j as i32));
        let z = dir * t;
        let s = branch.at(z)?;
        row.push(s.p - im_unit::<T>() * ln_cut_positive(z));
    }
    table.push(row);
    for k in 1..RICHARDSON_LEVELS {
        let f = T::lit(f64::powi(2.0, k as i32));
        let prev = &table[k - 1];
        let next: Vec<Complex<T>> = (0..prev.len() - 1)
            .map(|j| (prev[j + 1] * f - prev[j]) / (f - T::one()))
            .collect();
        table.push(next);
    }
    let extrapolants: Vec<Complex<T>> = table.iter().map(|r| *r.last().unwrap()).collect();
    let n = extrapolants.len();
    let spread = (extrapolants[n - 1] - extrapolants[n - 2]).norm();
    if !(spread <= T::lit(1e-8)) {
        return Err(Error::ExtrapolationUnstable { spread: spread.as_f64() });
    }
    Ok(NearPoleDecomposition { c: extrapolants[n - 1], extrapolants, branch })
}

/// Pole-regularised description of the `S'` branch.
///
/// With `u = z w` and `Y = -z e^{ip}`, `Y² - uY + z² = 0` has coefficients
/// analytic at 0, so `q = p - i ln(-z) = -i ln Y` and
/// `T = -z sin p = (Y - z²/Y)/(2i)` are analytic on the whole strip.
/// `ln Y` and `√T` are tracked along the ray from the origin.
#[derive(Clone, Debug)]
pub struct RegularizedMomentum<T: Real> {
    problem: SpectralProblem<T>,
    q_shift: T,
    sqrt_sign: T,
    base: MomentumSample<T>,
}

/// `q` and `√T` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularSample<T> {
    pub q: Complex<T>,
    pub sqrt_t: Complex<T>,
}

impl<T: Real> RegularizedMomentum<T> {
    /// Matches the regularised quantities to `branch` at its base point.
    pub fn new(branch: &MomentumBranch<T, SpectralProblem<T>>) -> Result<Self> {
        let mut reg = RegularizedMomentum {
            problem: branch.coefficient().clone(),
            q_shift: T::zero(),
            sqrt_sign: T::one(),
            base: branch.base(),
        };
        let b = branch.base();
        if b.z.im == T::zero() && b.z.re > T::zero() {
            return Err(Error::InvalidArgument("base point lies on the positive real cut".into()));
        }
        let raw = reg.sample(b.z)?;
        let diff = b.p - (raw.q + im_unit::<T>() * (-b.z).ln());
        let k = (diff.re / two_pi::<T>()).round();
        if (diff - real(k * two_pi::<T>())).norm() > T::lit(1e-8) * (T::one() + b.p.norm()) {
            return Err(Error::AmbiguousBranch { z: to_c64(b.z) });
        }
        reg.q_shift = k * two_pi::<T>();
        let expected = (-b.z).sqrt() * b.sqrt_sin;
        if (raw.sqrt_t - expected).norm() > (raw.sqrt_t + expected).norm() {
            reg.sqrt_sign = -T::one();
        }
        Ok(reg)
    }

    pub fn problem(&self) -> &SpectralProblem<T> {
        &self.problem
    }

    pub fn base(&self) -> MomentumSample<T> {
        self.base
    }

    fn y_big(&self, z: Complex<T>) -> Complex<T> {
        let u = self.problem.u(z);
        let d = (u * u - z * z * T::lit(4.0)).sqrt();
        let a = u + d;
        let b = u - d;
        (if a.norm() >= b.norm() { a } else { b }) * T::lit(0.5)
    }

    /// `q(z)` and `√T(z)`, valid on the whole strip including the origin.
    pub fn sample(&self, z: Complex<T>) -> Result<RegularSample<T>> {
        if !self.problem.strip().contains(z) {
            return Err(Error::OutsideStrip { z: to_c64(z) });
        }
        let two_i = Complex::new(T::zero(), T::lit(2.0));
        let y0 = self.problem.residue();
        let mut log_y = y0.ln();
        let mut sqrt_t = (y0 / two_i).sqrt();
        if z.norm() > T::zero() {
            let mut t = T::zero();
            let mut dt = T::lit(0.125);
            while t < T::one() {
                let tn = (t + dt).min(T::one());
                let zn = z * tn;
                let y = self.y_big(zn);
                let raw = y.ln();
                let k = ((log_y.im - raw.im) / two_pi::<T>()).round();
                let ln_new = raw + Complex::new(T::zero(), k * two_pi::<T>());
                let tv = (y - zn * zn / y) / two_i;
                let (s, clear) = nearest_sign(tv.sqrt(), sqrt_t);
                if (ln_new - log_y).norm() < T::FRAC_PI_4() && clear {
                    log_y = ln_new;
                    sqrt_t = s;
                    t = tn;
                    dt = (dt * T::lit(2.0)).min(T::lit(0.125));
                } else {
                    dt = dt * T::lit(0.5);
                    if dt < T::lit(1e-9) {
                        return Err(Error::StepCollapse { z: to_c64(zn), step: dt.as_f64() });
                    }
                }
            }
        }
        Ok(RegularSample {
            q: -im_unit::<T>() * log_y + real(self.q_shift),
            sqrt_t: sqrt_t * self.sqrt_sign,
        })
    }

    /// `q = p - i ln(-z)`.
    pub fn q(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.sample(z)?.q)
    }

    /// `√(-z sin p)`.
    pub fn sqrt_t(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.sample(z)?.sqrt_t)
    }

    /// The constant `C` of `p = i ln z + C + g`, with `ln` cut along `ℝ₊`.
    pub fn pole_constant(&self) -> Result<Complex<T>> {
        Ok(self.q(real(T::zero()))? + real(T::PI()))
    }

    fn off_pole(&self, z: Complex<T>) -> Result<()> {
        if z.norm() <= self.problem.pole_guard() {
            return Err(Error::PoleHit { z: to_c64(z) });
        }
        Ok(())
    }

    /// The `S'` branch `p(z)`; `z` must not lie on `ℝ₊`.
    pub fn p(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_pole(z)?;
        if z.im == T::zero() && z.re > T::zero() {
            return Err(Error::InvalidArgument("point lies on the positive real cut".into()));
        }
        Ok(self.q(z)? + im_unit::<T>() * (-z).ln())
    }

    /// `p` continued from `S' ∩ ℂ₊` across `ℝ₊`; `z` must not lie on `ℝ₋`.
    pub fn p_up(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_pole(z)?;
        if z.im == T::zero() && z.re < T::zero() {
            return Err(Error::InvalidArgument("point lies on the negative real axis".into()));
        }
        Ok(self.q(z)? + real(T::PI()) + im_unit::<T>() * z.ln())
    }

    /// `√(sin p)` of the `S'` branch.
    pub fn sqrt_sin(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_pole(z)?;
        Ok(self.sqrt_t(z)? / (-z).sqrt())
    }

    /// `√(sin p_up)`.
    pub fn sqrt_sin_up(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.off_pole(z)?;
        Ok(im_unit::<T>() * self.sqrt_t(z)? / z.sqrt())
    }
}
