//! Error type shared across the simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("denominator polynomial is empty or has a zero leading coefficient")]
    InvalidDenominator,

    #[error("transfer function is improper: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("feedback composition produced an identically zero denominator")]
    DegenerateFeedback,

    #[error("sample period must be positive, got {0}")]
    InvalidSamplePeriod(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("series length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("{what} = {value} outside valid range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("gain never crosses -3 dB within the scan range [1e-3, 1e4] rad/s")]
    BandwidthNotFound,

    #[error("DC gain is zero or not finite; -3 dB level undefined")]
    InvalidDcGain,

    #[error("point ({x}, {y}) is outside the reachable workspace")]
    Unreachable { x: f64, y: f64 },

    #[error("near-singular arm configuration at sample {sample} (elbow angle {theta_f})")]
    SingularConfiguration { sample: usize, theta_f: f64 },

    #[error("non-finite state detected at sample {sample} during {context}")]
    NonFinite { sample: usize, context: &'static str },

    #[error("desired series has zero range; NRMSE undefined")]
    ZeroRange,

    #[error("duration {duration} is not an integral multiple of the sample period {ts}")]
    NonIntegralHorizon { duration: f64, ts: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
