use thiserror::Error;

/// Errors shared across the detection, preprocessing and simulation APIs.
#[derive(Debug, Error)]
pub enum Error {
    /// QAM size is not one of the supported square constellations.
    #[error("unsupported constellation size {0} (supported: 4, 16, 64)")]
    UnsupportedConstellation(usize),

    /// A bit word had the wrong length for the constellation.
    #[error("bit word length {got} does not match {want} bits per symbol")]
    BitWordLength { got: usize, want: usize },

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The channel is (numerically) rank deficient and cannot be
    /// orthogonalized.
    #[error("singular channel: orthogonalization pivot {value:.3e} below threshold {threshold:.3e} at layer {layer}")]
    SingularChannel {
        layer: usize,
        value: f64,
        threshold: f64,
    },

    /// An exhaustive enumeration would exceed the configured cap.
    #[error("exhaustive enumeration of {required} sequences exceeds cap of {cap}")]
    EnumerationTooLarge { required: u64, cap: u64 },

    /// The permutation-model set handed to the soft demodulator does not
    /// cover every transmit symbol exactly once.
    #[error("permutation model set does not place symbol {0} last exactly once")]
    MissingPermutation(usize),

    /// Invalid run configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
