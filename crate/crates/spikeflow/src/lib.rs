//! Time evolution of gradient flow for rank-one matrix estimation, plus the
//! companion random-feature regression dynamics.
//!
//! The crate computes the limiting overlap and cost curves of projected
//! gradient descent on the spiked symmetric-noise model through three
//! independent routes that are expected to agree:
//!
//! * [`theory`] evaluates the closed-form solution built from the scaled
//!   moment generating function of the semicircle law;
//! * [`ide`] integrates the limiting contour system of resolvent generating
//!   functions with RK4 and serves as the numerical oracle;
//! * [`simulate`] runs finite-size projected gradient descent ensembles.
//!
//! [`matrix`] provides noise sampling and the resolvent concentration
//! experiments, and [`rf`] covers the random-feature model end to end.

pub mod error;
pub mod ide;
pub mod matrix;
pub mod quad;
pub mod rf;
pub mod semicircle;
pub mod simulate;
pub mod special;
pub mod streams;
pub mod theory;

pub use num_complex::Complex64;
