use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the statistics kernels and test procedures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input contains NaN or infinite entries.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// The unbiased statistics are undefined below the minimum sample size.
    #[error("sample too small: n = {n}, need n >= {min}")]
    SampleTooSmall { n: usize, min: usize },

    /// Paired inputs disagree on dimensions.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A sample (or a column of it) has zero distance variance, which the
    /// marginal-statistic contract excludes.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}
