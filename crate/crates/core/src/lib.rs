//! Complex WKB asymptotics for the difference Schrödinger equation
//!
//! ```text
//! ψ(z + h) + ψ(z - h) + (v(z) - E) ψ(z) = 0
//! ```
//!
//! with a potential `v` that has a simple pole at the origin. The crate
//! provides the complex momentum and its branches, action integrals, the
//! complex Gamma function, an exact lattice solver based on the three-term
//! recursion, and evaluators for the semiclassical asymptotic formulas
//! (standard WKB behaviour, the uniform Gamma-function law near the pole,
//! and the basis solutions `f₊`, `f₋`).
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod asymptotics;
pub mod error;
pub mod lattice;
pub mod logvalue;
pub mod momentum;
pub mod potential;
pub mod quadrature;
pub mod scalar;
pub mod specfun;

pub use error::{Error, Result};
pub use logvalue::LogValue;
pub use scalar::Real;

/// Double-precision complex number.
pub type Cplx = num_complex::Complex64;

pub type Potential = potential::MeromorphicPotential<f64>;
pub type Problem = potential::SpectralProblem<f64>;
pub type Strip = potential::Strip<f64>;
pub type Region = potential::Region<f64>;
pub type Constant = potential::ConstantCoefficient<f64>;
pub type Path = momentum::PathPolyline<f64>;
pub type Branch<C = Problem> = momentum::MomentumBranch<f64, C>;
pub type Regularized = momentum::RegularizedMomentum<f64>;
pub type Log = LogValue<f64>;
pub type Model = asymptotics::AsymptoticModel<f64>;
pub type Line = lattice::LatticeLine<f64>;
pub type Solution = lattice::LatticeSolution<f64>;
pub type Sector = specfun::SectorSpec<f64>;
