//! Meromorphic potentials with a single simple pole at the origin, the
//! spectral problem `w = v - E` on a rectangular strip, and turning points.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::{Complex, Complex64};
use regex::Regex;

use crate::error::{Error, Result};
use crate::scalar::{real, to_c64, Real};

/// Default radius of the excluded disk around the pole.
pub const DEFAULT_POLE_GUARD: f64 = 1e-12;

/// A coefficient `w(z)` of the difference equation
/// `ψ(z+h) + ψ(z-h) + w(z) ψ(z) = 0`.
pub trait Coefficient<T: Real>: Clone + Send + Sync {
    fn w(&self, z: Complex<T>) -> Result<Complex<T>>;
    fn dw(&self, z: Complex<T>) -> Result<Complex<T>>;

    /// Checks that `z` is an admissible base point for a momentum branch.
    fn check_base(&self, _z: Complex<T>) -> Result<()> {
        Ok(())
    }

    /// Radius of the disk around a singular point inside which evaluation
    /// is refused.
    fn pole_guard(&self) -> T {
        T::zero()
    }
}

/// A `z`-independent coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantCoefficient<T>(pub Complex<T>);

impl<T: Real> Coefficient<T> for ConstantCoefficient<T> {
    fn w(&self, _z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.0)
    }
    fn dw(&self, _z: Complex<T>) -> Result<Complex<T>> {
        Ok(real(T::zero()))
    }
}

/// One term of the pole-free part of a potential.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticTerm<T> {
    /// `coef * z^power`
    Monomial { coef: Complex<T>, power: u32 },
    /// `coef / (z - at)` with `at` outside the closed strip.
    Pole { coef: Complex<T>, at: Complex<T> },
    /// `lambda * cot(pi z) - lambda / (pi z)`
    CotRegular { lambda: Complex<T> },
}

fn zeta_even() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        use std::f64::consts::PI;
        (1..=40)
            .map(|k| match k {
                1 => PI.powi(2) / 6.0,
                2 => PI.powi(4) / 90.0,
                3 => PI.powi(6) / 945.0,
                4 => PI.powi(8) / 9450.0,
                _ => {
                    let s = 2 * k;
                    let mut acc = 0.0;
                    for n in (2..=200).rev() {
                        acc += (n as f64).powi(-s);
                    }
                    1.0 + acc
                }
            })
            .collect()
    })
}

/// `ζ(2k)` for `k = 1..=40`.
pub fn zeta_even_value(k: usize) -> f64 {
    zeta_even()[k - 1]
}

const COT_SERIES_RADIUS: f64 = 0.25;

fn cot_regular<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    if z.norm() < T::lit(COT_SERIES_RADIUS) {
        // -(2/π) Σ ζ(2k) z^{2k-1}
        let z2 = z * z;
        let mut pow = z;
        let mut sum = real(T::zero());
        for k in 1..=40 {
            let term = pow * T::lit(zeta_even_value(k));
            sum = sum + term;
            if term.norm() <= T::epsilon() * T::lit(0.25) * sum.norm() {
                break;
            }
            pow = pow * z2;
        }
        sum * (-T::lit(2.0) / pi)
    } else {
        let pz = z * pi;
        pz.cos() / pz.sin() - (pz).inv()
    }
}

fn cot_regular_deriv<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    if z.norm() < T::lit(COT_SERIES_RADIUS) {
        let z2 = z * z;
        let mut pow = real(T::one());
        let mut sum = real(T::zero());
        for k in 1..=40 {
            let term = pow * T::lit((2 * k - 1) as f64 * zeta_even_value(k));
            sum = sum + term;
            if k > 1 && term.norm() <= T::epsilon() * T::lit(0.25) * sum.norm() {
                break;
            }
            pow = pow * z2;
        }
        sum * (-T::lit(2.0) / pi)
    } else {
        let s = (z * pi).sin();
        -(s * s).inv() * pi + (z * z * pi).inv()
    }
}

impl<T: Real> AnalyticTerm<T> {
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        match self {
            AnalyticTerm::Monomial { coef, power } => *coef * z.powu(*power),
            AnalyticTerm::Pole { coef, at } => *coef / (z - *at),
            AnalyticTerm::CotRegular { lambda } => *lambda * cot_regular(z),
        }
    }

    pub fn deriv(&self, z: Complex<T>) -> Complex<T> {
        match self {
            AnalyticTerm::Monomial { coef, power } => {
                if *power == 0 {
                    real(T::zero())
                } else {
                    *coef * z.powu(*power - 1) * T::lit(*power as f64)
                }
            }
            AnalyticTerm::Pole { coef, at } => {
                let d = z - *at;
                -*coef / (d * d)
            }
            AnalyticTerm::CotRegular { lambda } => *lambda * cot_regular_deriv(z),
        }
    }

    /// Adds the Taylor coefficients at 0 (orders `0..coeffs.len()`).
    fn add_taylor(&self, coeffs: &mut [Complex<T>]) {
        match self {
            AnalyticTerm::Monomial { coef, power } => {
                if let Some(c) = coeffs.get_mut(*power as usize) {
                    *c = *c + *coef;
                }
            }
            AnalyticTerm::Pole { coef, at } => {
                // coef/(z-a) = -Σ coef z^k / a^{k+1}
                let mut inv = at.inv();
                for c in coeffs.iter_mut() {
                    *c = *c - *coef * inv;
                    inv = inv / *at;
                }
            }
            AnalyticTerm::CotRegular { lambda } => {
                let f = -T::lit(2.0) / T::PI();
                for (k, c) in coeffs.iter_mut().enumerate() {
                    if k % 2 == 1 {
                        *c = *c + *lambda * (T::lit(zeta_even_value(k.div_ceil(2))) * f);
                    }
                }
            }
        }
    }
}

/// `v(z) = residue / z + Σ terms(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeromorphicPotential<T> {
    residue: Complex<T>,
    terms: Vec<AnalyticTerm<T>>,
    description: String,
}

impl<T: Real> MeromorphicPotential<T> {
    pub fn new(
        residue: Complex<T>,
        terms: Vec<AnalyticTerm<T>>,
        description: impl Into<String>,
    ) -> Result<Self> {
        if residue.norm() == T::zero() || !residue.norm().is_finite() {
            return Err(Error::InvalidPotential(
                "the residue at the origin must be finite and nonzero".into(),
            ));
        }
        for t in &terms {
            if let AnalyticTerm::Pole { at, .. } = t {
                if at.norm() == T::zero() {
                    return Err(Error::InvalidPotential(
                        "extra pole terms must sit away from the origin".into(),
                    ));
                }
            }
        }
        Ok(MeromorphicPotential {
            residue,
            terms,
            description: description.into(),
        })
    }

    /// `residue / z`.
    pub fn simple_pole(residue: Complex<T>) -> Result<Self> {
        Self::new(residue, Vec::new(), "simple pole")
    }

    /// `lambda * cot(pi z)`.
    pub fn cotangent(lambda: Complex<T>) -> Result<Self> {
        Self::new(
            lambda / T::PI(),
            vec![AnalyticTerm::CotRegular { lambda }],
            "cotangent",
        )
    }

    /// Parses an expression such as `1/z + 0.3*z` or `lambda*cot(pi*z)`.
    ///
    /// Terms are separated by `+`/`-`. Accepted terms (`c` is a coefficient
    /// and may be omitted where it would be `1`): `c`, `c*z`, `c*z^n`,
    /// `c/z`, `c/(z-b)`, `c/(z+b)`, `c*cot(pi*z)`. A coefficient is a real
    /// literal, an imaginary literal like `2i`, a parenthesised complex
    /// literal like `(1+2i)`, or a name looked up in `params`.
    pub fn parse(text: &str, params: &HashMap<String, Complex64>) -> Result<Self> {
        parse_expression(text, params)
    }

    pub fn residue(&self) -> Complex<T> {
        self.residue
    }

    pub fn terms(&self) -> &[AnalyticTerm<T>] {
        &self.terms
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn analytic(&self, z: Complex<T>) -> Complex<T> {
        self.terms
            .iter()
            .fold(real(T::zero()), |acc, t| acc + t.eval(z))
    }

    pub fn analytic_deriv(&self, z: Complex<T>) -> Complex<T> {
        self.terms
            .iter()
            .fold(real(T::zero()), |acc, t| acc + t.deriv(z))
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.residue / z + self.analytic(z)
    }

    /// Taylor coefficients of the analytic part at 0, orders `0..=order`.
    pub fn taylor(&self, order: usize) -> Vec<Complex<T>> {
        let mut c = vec![real(T::zero()); order + 1];
        for t in &self.terms {
            t.add_taylor(&mut c);
        }
        c
    }
}

/// `S = {|Re z| < d_x, |Im z| < d_y}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Strip<T> {
    pub d_x: T,
    pub d_y: T,
}

impl<T: Real> Strip<T> {
    pub fn new(d_x: T, d_y: T) -> Result<Self> {
        if !(d_x > T::zero() && d_y > T::zero()) || !d_x.is_finite() || !d_y.is_finite() {
            return Err(Error::InvalidArgument(
                "strip half-widths must be positive and finite".into(),
            ));
        }
        Ok(Strip { d_x, d_y })
    }

    pub fn contains(&self, z: Complex<T>) -> bool {
        z.re.abs() < self.d_x && z.im.abs() < self.d_y
    }

    pub fn contains_closed(&self, z: Complex<T>) -> bool {
        z.re.abs() <= self.d_x && z.im.abs() <= self.d_y
    }
}

/// The equation data: potential, energy and strip.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralProblem<T> {
    potential: MeromorphicPotential<T>,
    energy: Complex<T>,
    strip: Strip<T>,
    pole_guard: T,
}

impl<T: Real> SpectralProblem<T> {
    pub fn new(potential: MeromorphicPotential<T>, energy: Complex<T>, strip: Strip<T>) -> Result<Self> {
        for t in potential.terms() {
            match t {
                AnalyticTerm::Pole { at, .. } if strip.contains_closed(*at) => {
                    return Err(Error::InvalidPotential(format!(
                        "pole at {} lies in the closed strip",
                        to_c64(*at)
                    )));
                }
                AnalyticTerm::CotRegular { .. } if strip.d_x >= T::one() => {
                    return Err(Error::InvalidPotential(
                        "cotangent terms need d_x < 1 to keep a single pole in the strip".into(),
                    ));
                }
                _ => {}
            }
        }
        Ok(SpectralProblem {
            potential,
            energy,
            strip,
            pole_guard: T::lit(DEFAULT_POLE_GUARD),
        })
    }

    pub fn with_pole_guard(mut self, guard: T) -> Self {
        self.pole_guard = guard;
        self
    }

    pub fn potential(&self) -> &MeromorphicPotential<T> {
        &self.potential
    }

    pub fn energy(&self) -> Complex<T> {
        self.energy
    }

    pub fn strip(&self) -> Strip<T> {
        self.strip
    }

    pub fn residue(&self) -> Complex<T> {
        self.potential.residue()
    }

    fn check(&self, z: Complex<T>) -> Result<()> {
        if !self.strip.contains(z) {
            return Err(Error::OutsideStrip { z: to_c64(z) });
        }
        if z.norm() <= self.pole_guard {
            return Err(Error::PoleHit { z: to_c64(z) });
        }
        Ok(())
    }

    /// `w(z) = v(z) - E`.
    pub fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.check(z)?;
        Ok(self.potential.eval(z) - self.energy)
    }

    /// `z w(z)`, analytic at the origin. No domain check.
    pub fn u(&self, z: Complex<T>) -> Complex<T> {
        self.potential.residue() + z * (self.potential.analytic(z) - self.energy)
    }

    /// Derivative of [`SpectralProblem::u`].
    pub fn du(&self, z: Complex<T>) -> Complex<T> {
        self.potential.analytic(z) - self.energy + z * self.potential.analytic_deriv(z)
    }

    /// Residue and Taylor coefficients `c_0..c_order` of `w` at the origin.
    pub fn laurent(&self, order: usize) -> Result<(Complex<T>, Vec<Complex<T>>)> {
        if order > 16 {
            return Err(Error::InvalidArgument("Laurent order must not exceed 16".into()));
        }
        let mut c = self.potential.taylor(order);
        c[0] = c[0] - self.energy;
        Ok((self.potential.residue(), c))
    }

    /// Roots of `w(z) = ±2` in `region`, polished by damped Newton from a
    /// uniform grid of seeds.
    pub fn turning_points(&self, region: &Region<T>, seeds_per_axis: usize) -> Result<Vec<Complex<T>>> {
        turning_points(self, region, seeds_per_axis)
    }

    /// Checks that `S∖{0}` is free of turning points and that `Im p` does
    /// not vanish on a dense grid.
    pub fn verify_regular(&self) -> Result<RegularityReport<T>> {
        verify_regular(self)
    }
}

impl<T: Real> Coefficient<T> for SpectralProblem<T> {
    fn w(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.eval(z)
    }

    fn dw(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.check(z)?;
        Ok(-self.potential.residue() / (z * z) + self.potential.analytic_deriv(z))
    }

    fn check_base(&self, z: Complex<T>) -> Result<()> {
        self.check(z)?;
        if z.im == T::zero() && z.re > T::zero() {
            return Err(Error::InvalidArgument(
                "base point lies on the positive real cut".into(),
            ));
        }
        Ok(())
    }

    fn pole_guard(&self) -> T {
        self.pole_guard
    }
}

/// Search region for turning points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region<T> {
    Rect { re_min: T, re_max: T, im_min: T, im_max: T },
    Disk { center: Complex<T>, radius: T },
}

impl<T: Real> Region<T> {
    pub fn square(half: T) -> Self {
        Region::Rect { re_min: -half, re_max: half, im_min: -half, im_max: half }
    }

    pub fn contains(&self, z: Complex<T>) -> bool {
        match *self {
            Region::Rect { re_min, re_max, im_min, im_max } => {
                z.re >= re_min && z.re <= re_max && z.im >= im_min && z.im <= im_max
            }
            Region::Disk { center, radius } => (z - center).norm() <= radius,
        }
    }

    fn bounds(&self) -> (T, T, T, T) {
        match *self {
            Region::Rect { re_min, re_max, im_min, im_max } => (re_min, re_max, im_min, im_max),
            Region::Disk { center, radius } => (
                center.re - radius,
                center.re + radius,
                center.im - radius,
                center.im + radius,
            ),
        }
    }
}

const NEWTON_MAX_ITER: usize = 80;

enum NewtonOutcome<T> {
    Root(Complex<T>),
    Escaped,
    Stalled(Complex<T>, T),
}

fn newton_turning<T: Real>(
    problem: &SpectralProblem<T>,
    seed: Complex<T>,
    sign: T,
    region: &Region<T>,
    scale: T,
) -> NewtonOutcome<T> {
    // F(z) = z w(z) - 2 s z, regular at the origin.
    let two_s = T::lit(2.0) * sign;
    let f = |z: Complex<T>| problem.u(z) - z * two_s;
    let target = T::lit(1e-12);
    let mut z = seed;
    let mut fz = f(z);
    for _ in 0..NEWTON_MAX_ITER {
        let resid = fz.norm() / z.norm().max(T::lit(1e-300));
        if resid < target && z.norm() > problem.pole_guard {
            return NewtonOutcome::Root(z);
        }
        let df = problem.du(z) - real(two_s);
        if df.norm() == T::zero() {
            return NewtonOutcome::Stalled(z, resid);
        }
        let step = fz / df;
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let cand = z - step * lambda;
            let fc = f(cand);
            if fc.norm() < fz.norm() {
                z = cand;
                fz = fc;
                accepted = true;
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        if !accepted {
            return NewtonOutcome::Stalled(z, resid);
        }
        let (a, b, c, d) = region.bounds();
        if z.re < a - scale || z.re > b + scale || z.im < c - scale || z.im > d + scale {
            return NewtonOutcome::Escaped;
        }
    }
    let resid = fz.norm() / z.norm().max(T::lit(1e-300));
    if resid < T::lit(1e-10) {
        NewtonOutcome::Root(z)
    } else {
        NewtonOutcome::Stalled(z, resid)
    }
}

fn turning_points<T: Real>(
    problem: &SpectralProblem<T>,
    region: &Region<T>,
    seeds_per_axis: usize,
) -> Result<Vec<Complex<T>>> {
    let n = seeds_per_axis.max(2);
    let (a, b, c, d) = region.bounds();
    let scale = (b - a).max(d - c);
    let mut roots: Vec<Complex<T>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = a + (b - a) * T::lit((i as f64 + 0.5) / n as f64);
            let y = c + (d - c) * T::lit((j as f64 + 0.5) / n as f64);
            let seed = Complex::new(x, y);
            if !region.contains(seed) {
                continue;
            }
            for sign in [T::one(), -T::one()] {
                match newton_turning(problem, seed, sign, region, scale) {
                    NewtonOutcome::Root(z) => {
                        if region.contains(z)
                            && z.norm() > problem.pole_guard
                            && roots.iter().all(|r| (*r - z).norm() > T::lit(1e-8))
                        {
                            roots.push(z);
                        }
                    }
                    NewtonOutcome::Escaped => {}
                    NewtonOutcome::Stalled(z, resid) => {
                        // A stall away from the region is a seed that wandered
                        // off; inside the region it is a genuine failure.
                        if region.contains(z) && z.norm() > problem.pole_guard {
                            return Err(Error::NonConvergence {
                                seed: to_c64(seed),
                                residual: resid.as_f64(),
                            });
                        }
                    }
                }
            }
        }
    }
    roots.sort_by(|p, q| {
        p.re.partial_cmp(&q.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(p.im.partial_cmp(&q.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(roots)
}

/// Outcome of [`SpectralProblem::verify_regular`].
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport<T> {
    pub regular: bool,
    pub turning_points: Vec<Complex<T>>,
    /// Minimum of `|Im p|` over the sample grid.
    pub im_p_margin: T,
    /// Grid point where the minimum is attained.
    pub margin_at: Complex<T>,
}

/// Grid resolution used by `verify_regular`.
pub const REGULARITY_GRID: usize = 121;
const REGULARITY_SEEDS: usize = 24;

fn verify_regular<T: Real>(problem: &SpectralProblem<T>) -> Result<RegularityReport<T>> {
    let s = problem.strip;
    let region = Region::Rect { re_min: -s.d_x, re_max: s.d_x, im_min: -s.d_y, im_max: s.d_y };
    let tps = turning_points(problem, &region, REGULARITY_SEEDS)?;
    let mut margin = T::infinity();
    let mut at = Complex::new(T::zero(), T::zero());
    let n = REGULARITY_GRID;
    for i in 0..n {
        for j in 0..n {
            // Interior grid: the open strip is sampled up to 1e-9 of its edge.
            let fx = T::lit(2.0 * i as f64 / (n - 1) as f64 - 1.0) * (T::one() - T::lit(1e-9));
            let fy = T::lit(2.0 * j as f64 / (n - 1) as f64 - 1.0) * (T::one() - T::lit(1e-9));
            let z = Complex::new(fx * s.d_x, fy * s.d_y);
            if z.norm() <= problem.pole_guard {
                continue;
            }
            let w = problem.eval(z)?;
            let (big, _) = crate::momentum::multipliers(w);
            let m = big.norm().ln().abs();
            if m < margin {
                margin = m;
                at = z;
            }
        }
    }
    Ok(RegularityReport {
        regular: tps.is_empty() && margin > T::lit(1e-9),
        turning_points: tps,
        im_p_margin: margin,
        margin_at: at,
    })
}

// ---------------------------------------------------------------------------
// expression parsing

fn split_terms(text: &str) -> Result<Vec<String>> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::InvalidPotential("empty expression".into()));
    }
    let chars: Vec<char> = s.chars().collect();
    let mut terms = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::InvalidPotential("unbalanced parentheses".into()));
                }
            }
            '+' | '-' if depth == 0 && i > start => {
                let prev = chars[i - 1];
                let exponent = (prev == 'e' || prev == 'E')
                    && i >= 2
                    && (chars[i - 2].is_ascii_digit() || chars[i - 2] == '.');
                if !exponent && prev != '*' && prev != '/' && prev != '^' {
                    terms.push(chars[start..i].iter().collect());
                    start = i;
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::InvalidPotential("unbalanced parentheses".into()));
    }
    terms.push(chars[start..].iter().collect());
    Ok(terms)
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_coefficient(s: &str, params: &HashMap<String, Complex64>) -> Result<Complex64> {
    let bad = || Error::InvalidPotential(format!("cannot read coefficient `{s}`"));
    if s.is_empty() || s == "+" {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if s == "-" {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    if let Some(inner) = body.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
        let parts = split_terms(inner)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in parts {
            if p.contains('(') {
                return Err(bad());
            }
            acc += parse_coefficient(&p, params)?;
        }
        return Ok(acc * sign);
    }
    if body == "i" {
        return Ok(Complex64::new(0.0, sign));
    }
    if let Some(num) = body.strip_suffix('i') {
        if let Some(x) = parse_number(num) {
            return Ok(Complex64::new(0.0, sign * x));
        }
    }
    if let Some(x) = parse_number(body) {
        return Ok(Complex64::new(sign * x, 0.0));
    }
    if let Some(v) = params.get(body) {
        return Ok(*v * sign);
    }
    Err(bad())
}

struct Patterns {
    monomial: Regex,
    cot: Regex,
    pole: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        monomial: Regex::new(r"^(?:(?P<c>.*)\*)?(?P<s>[+-]?)z(?:\^(?P<n>\d+))?$").unwrap(),
        cot: Regex::new(r"^(?:(?P<c>.*)\*)?(?P<s>[+-]?)cot\(pi\*z\)$").unwrap(),
        pole: Regex::new(r"^(?P<c>.*)/(?:z|\(z(?P<b>[+-].+)\))$").unwrap(),
    })
}

fn signed_coef(c: Option<&str>, s: &str, params: &HashMap<String, Complex64>) -> Result<Complex64> {
    let coef = parse_coefficient(c.unwrap_or(""), params)?;
    Ok(if s == "-" { -coef } else { coef })
}

fn parse_expression<T: Real>(
    text: &str,
    params: &HashMap<String, Complex64>,
) -> Result<MeromorphicPotential<T>> {
    let pats = patterns();
    let mut residue = Complex64::new(0.0, 0.0);
    let mut poly: Vec<Complex64> = Vec::new();
    let mut terms: Vec<AnalyticTerm<T>> = Vec::new();
    let lift = |c: Complex64| Complex::new(T::lit(c.re), T::lit(c.im));
    for term in split_terms(text)? {
        if let Some(m) = pats.pole.captures(&term) {
            let coef = parse_coefficient(m.name("c").map_or("", |x| x.as_str()), params)?;
            match m.name("b") {
                None => residue += coef,
                Some(b) => {
                    // z + b  →  pole at -b
                    let shift = parse_coefficient(b.as_str(), params)?;
                    if shift.norm() == 0.0 {
                        residue += coef;
                    } else {
                        terms.push(AnalyticTerm::Pole { coef: lift(coef), at: lift(-shift) });
                    }
                }
            }
        } else if let Some(m) = pats.cot.captures(&term) {
            let lambda = signed_coef(m.name("c").map(|x| x.as_str()), &m["s"], params)?;
            residue += lambda / std::f64::consts::PI;
            terms.push(AnalyticTerm::CotRegular { lambda: lift(lambda) });
        } else if let Some(m) = pats.monomial.captures(&term) {
            let coef = signed_coef(m.name("c").map(|x| x.as_str()), &m["s"], params)?;
            let n: usize = match m.name("n") {
                Some(n) => n
                    .as_str()
                    .parse()
                    .map_err(|_| Error::InvalidPotential(format!("bad exponent in `{term}`")))?,
                None => 1,
            };
            if poly.len() <= n {
                poly.resize(n + 1, Complex64::new(0.0, 0.0));
            }
            poly[n] += coef;
        } else {
            let c = parse_coefficient(&term, params)
                .map_err(|_| Error::InvalidPotential(format!("unrecognised term `{term}`")))?;
            if poly.is_empty() {
                poly.push(Complex64::new(0.0, 0.0));
            }
            poly[0] += c;
        }
    }
    for (n, c) in poly.iter().enumerate() {
        if c.norm() != 0.0 {
            terms.insert(
                terms.iter().take_while(|t| matches!(t, AnalyticTerm::Monomial { .. })).count(),
                AnalyticTerm::Monomial { coef: lift(*c), power: n as u32 },
            );
        }
    }
    MeromorphicPotential::new(lift(residue), terms, text.trim())
}
