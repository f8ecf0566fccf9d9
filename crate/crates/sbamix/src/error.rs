//! Crate-wide error type.

use crate::sba::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A measure- or domain-construction invariant was violated.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Barycenter of a zero-mass interval unbounded below: no finite
    /// fallback exists, so the caller must decide.
    #[error("barycenter of zero-mass interval ({lo}, {hi}] with unbounded domain")]
    ZeroMassUnboundedInterval { lo: f64, hi: f64 },

    /// A triangular array failed structural validation.
    #[error("invalid barycenter array: {}", format_violations(.0))]
    InvalidArray(Vec<Violation>),

    /// A prior family or scale law was constructed with bad parameters.
    #[error("invalid prior specification: {0}")]
    InvalidPrior(String),

    /// A degenerate node law cannot produce a value inside the requested
    /// interval.
    #[error("degenerate law at {value} lies outside ({lo}, {hi}]")]
    DegenerateOutsideInterval { value: f64, lo: f64, hi: f64 },

    /// The restricting interval carries no mass under the law.
    #[error("law assigns zero mass to ({lo}, {hi}]")]
    EmptyRestriction { lo: f64, hi: f64 },

    /// An observation or parameter fell outside a kernel's sample or
    /// parameter space.
    #[error("{what} = {value} outside the {kernel} kernel's {space}")]
    KernelDomain {
        kernel: &'static str,
        what: &'static str,
        value: f64,
        space: &'static str,
    },

    /// Every mixture component had zero density at an observation.
    #[error("all components have zero density at observation {index} (y = {value})")]
    AllMinusInfinity { index: usize, value: f64 },

    /// Log target non-finite at the slice sampler's starting point.
    #[error("slice sampler started at a point with non-finite log target")]
    NonFiniteTarget,

    /// Sampler configuration failed validation.
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),

    /// A chain encountered a non-finite log posterior and aborted.
    #[error("numerical abort: {0}")]
    NumericalAbort(String),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    /// Text or CSV artifact failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(4).map(|v| v.to_string()).collect();
    if violations.len() > 4 {
        format!("{} (+{} more)", shown.join("; "), violations.len() - 4)
    } else {
        shown.join("; ")
    }
}
