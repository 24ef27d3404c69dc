//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("unscaled Bessel value overflows f64 at argument {argument}")]
    Overflow { argument: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemicircleError {
    #[error("Stieltjes transform undefined on the support: z = {re} is real with |z| <= 2")]
    OnSupport { re: f64 },
    #[error("Laplace point p = {p} must exceed 2/sqrt(lambda) = {threshold}")]
    LaplaceDomain { p: f64, threshold: f64 },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("lambda must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("initial overlap must satisfy |alpha| <= 1, got {0}")]
    InvalidAlpha(f64),
    #[error("tau grid must be non-empty, start at tau >= 0 and increase strictly")]
    InvalidGrid,
    #[error("double-integral truncation fell short of the requested tolerance (estimated tail {tail:.3e})")]
    TruncationTolerance { tail: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdeError {
    #[error("contour radius {radius} must exceed 2 + margin = {min_radius}")]
    InvalidRadius { radius: f64, min_radius: f64 },
    #[error("contour needs at least 64 points, got {0}")]
    TooFewPoints(usize),
    #[error("time step {0} must be positive and at most 1e-2")]
    InvalidTimeStep(f64),
    #[error("tau_max {0} must be positive and at most 100")]
    InvalidHorizon(f64),
    #[error("values length {values} does not match contour size {points}")]
    LengthMismatch { values: usize, points: usize },
    #[error("contour moment has imaginary residue {residue:.3e}; grid too coarse or data asymmetric")]
    ImaginaryResidue { residue: f64 },
    #[error("solution diverged at tau = {tau}: |q| = {q_abs}, p1 finite = {p1_finite}")]
    Diverged { tau: f64, q_abs: f64, p1_finite: bool },
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix dimension must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("spectral margin delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("probe vectors must be unit norm to 1e-12 (|u| = {u_norm}, |v| = {v_norm})")]
    NotUnit { u_norm: f64, v_norm: f64 },
    #[error("shift z is within 1e-12 of an eigenvalue; resolvent system singular")]
    SingularSystem,
    #[error("probe dimension {probe} does not match matrix dimension {matrix}")]
    DimensionMismatch { probe: usize, matrix: usize },
    #[error("landscape check needs n <= 400 for dense eigendecomposition, got {0}")]
    LandscapeTooLarge(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation config invalid: {0}")]
    InvalidConfig(String),
    #[error("gradient half-step produced the zero vector; state is corrupt")]
    ZeroVector,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RfError {
    #[error("random feature config invalid: {0}")]
    InvalidConfig(String),
    #[error("eigendecomposition failed: matrix contains non-finite entries")]
    NonFiniteMatrix,
    #[error("mode {index} has mu + lambda* = {value:.3e} <= 0 with nonzero weight; flow diverges")]
    NegativeMode { index: usize, value: f64 },
}
