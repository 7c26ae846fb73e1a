//! Crate-wide error type.
//!
//! Numerical routines fail loudly rather than propagating NaN: every operation
//! that can hit a singular point, an empty measure, or a non-converging
//! refinement returns a dedicated variant carrying the offending coordinates.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A registry lookup was made with an id that names no known form.
    #[error("unknown function form `{0}`")]
    UnknownForm(String),

    /// A registry form was instantiated with the wrong number of parameters.
    #[error("form `{form}` expects {expected} parameter(s), got {got}")]
    ParamCount {
        form: &'static str,
        expected: &'static str,
        got: usize,
    },

    /// A pointwise evaluation produced a non-finite value or was asked for a
    /// point outside the form's domain. The message names the function and
    /// the coordinates involved.
    #[error("evaluation failed: {0}")]
    Evaluation(String),

    /// A caller needed the reciprocal of a scale partial that vanishes at the
    /// given point (|df/daxis| below the divergence threshold).
    #[error("scale partial d/d{axis} vanishes at (x, y) = ({x}, {y}); reciprocal undefined")]
    DivergentPartial { axis: char, x: f64, y: f64 },

    /// The mixing measure restricted to the requested subset carries no mass
    /// at the conditioning point, so posterior quantities are undefined.
    #[error("subset carries no posterior mass at (x, y) = ({x}, {y})")]
    ZeroMass { x: f64, y: f64 },

    /// An integrand evaluated to NaN or infinity at a quadrature node.
    #[error("integrand is non-finite at t = {at}")]
    NonFiniteIntegrand { at: f64 },

    /// Adaptive refinement exhausted its doubling budget without the
    /// successive estimates settling.
    #[error("quadrature did not converge: last change {last_change:e} vs tolerance {rel_tol:e}")]
    NoConvergence { last_change: f64, rel_tol: f64 },

    /// A tabulated CDF came out non-monotone (the underlying density must be
    /// negative somewhere — a model bug, not a sampling accident).
    #[error("tabulation failed: {0}")]
    Tabulation(String),

    /// The level-set pair sampler ran out of attempts before collecting the
    /// requested number of equal-scale pairs.
    #[error("level-set sampling exhausted: found {found} of {requested} requested pairs")]
    LevelSetExhausted { found: usize, requested: usize },

    /// An operation that requires a mean of the form m(theta, x) was handed a
    /// mean that varies with y.
    #[error("mean shape unsupported: {0}")]
    MeanShape(String),

    /// Too many probe points were skipped for the sweep's verdict to mean
    /// anything.
    #[error("insufficient coverage: {skipped} of {total} probe points were skipped")]
    InsufficientCoverage { skipped: usize, total: usize },

    /// Scenario or configuration validation failed.
    #[error("invalid input: {0}")]
    Invalid(String),
}
