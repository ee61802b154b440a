use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An integer argument is outside the range the operation accepts.
    #[error("{what} = {value} is out of range (allowed {min}..={max})")]
    OutOfRange {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    /// The Gram matrix is singular for d < p; the pseudo-inverse calculus is not provided.
    #[error("unsupported regime: d = {d} < p = {p} (Weingarten functions need d >= p)")]
    UnsupportedRegime { p: usize, d: usize },

    /// A hard resource cap (moment order, enumeration size) would be exceeded.
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    /// A validity condition of an analytic bound or formula does not hold.
    #[error("condition violated: {0}")]
    Condition(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("eta is undefined for an identically zero spectrum")]
    UndefinedEta,

    #[error("cycle type {0} is not a derangement class")]
    NotDerangement(String),

    #[error("invalid cycle type: {0}")]
    InvalidCycleType(String),

    #[error("initial energy {energy} lies outside the orbit range [{min}, {max}]")]
    InvalidInitialEnergy { energy: f64, min: f64, max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
