use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {z} lies within the pole guard of the origin")]
    PoleHit { z: Complex64 },
    #[error("point {z} lies outside the strip")]
    OutsideStrip { z: Complex64 },
    #[error("root polishing from seed {seed} stalled at residual {residual:e}")]
    NonConvergence { seed: Complex64, residual: f64 },
    #[error("momentum branch is ambiguous at {z}: Im p vanishes")]
    AmbiguousBranch { z: Complex64 },
    #[error("{z} is a turning point")]
    TurningPoint { z: Complex64 },
    #[error("continuation step collapsed to {step:e} near {z}")]
    StepCollapse { z: Complex64, step: f64 },
    #[error("extrapolated limit unstable: successive estimates differ by {spread:e}")]
    ExtrapolationUnstable { spread: f64 },
    #[error("quadrature on [{a}, {b}] stalled with error estimate {estimate:e}")]
    QuadratureFailure { a: f64, b: f64, estimate: f64 },
    #[error("curve is not a graph over the imaginary axis at vertex {index}")]
    NotVertical { index: usize },
    #[error("argument {arg} lies outside the sector |arg| <= pi - {epsilon}")]
    OutsideSector { arg: f64, epsilon: f64 },
    #[error("Gamma has a pole at {z}")]
    PoleOfGamma { z: Complex64 },
    #[error("reflection formula evaluated at an integer {z}")]
    IntegerArgument { z: Complex64 },
    #[error("seed point {z} lies outside the seeding region")]
    OutsideSeedRegion { z: Complex64 },
    #[error("lattice point {k} hits the pole tolerance")]
    PoleOnLattice { k: i64 },
    #[error("log-magnitude {log_magnitude:e} exceeds the configured bound")]
    Overflow { log_magnitude: f64 },
    #[error("lattice index {k} outside range [{min}, {max}]")]
    RangeError { k: i64, min: i64, max: i64 },
    #[error("basis is degenerate: |w| = {modulus:e}")]
    DegenerateBasis { modulus: f64 },
    #[error("1 - exp(2 pi i z / h) vanishes at {z}")]
    PeriodicZero { z: Complex64 },
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
