use alloc::string::String;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("frame dimensions {width}x{height} must each be >= 8 and divisible by 8")]
    BadFrameDims { width: usize, height: usize },
    #[error("sample buffer holds {actual} bytes but {width}x{height} needs {expected}")]
    SampleCount {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("frame set is empty")]
    EmptyFrameSet,
    #[error("frame {index} is {width}x{height}, expected {expected_width}x{expected_height}")]
    MixedFrameDims {
        index: usize,
        width: usize,
        height: usize,
        expected_width: usize,
        expected_height: usize,
    },
    #[error("source indices must be strictly increasing and match the frame count")]
    BadSourceIndices,
    #[error("cannot sample {count} frames out of {total}")]
    BadSampleCount { count: usize, total: usize },
    #[error("patch {patch_width}x{patch_height} does not tile a {width}x{height} frame in 8x8 blocks")]
    BadPatchDims {
        patch_width: usize,
        patch_height: usize,
        width: usize,
        height: usize,
    },
    #[error("quality value {0} outside 1..=100")]
    QualityOutOfRange(i64),
    #[error("malformed bitstream: {0}")]
    MalformedStream(&'static str),
    #[error("invalid denoiser: {0}")]
    BadDenoiser(String),
    #[error("reference frames do not match the input: {0}")]
    ReferenceMismatch(String),
    #[error("quality list must be non-empty and strictly ascending")]
    BadQualityList,
    #[error("lambda grid must be non-empty, positive and strictly increasing")]
    BadLambdaGrid,
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("RD table is inconsistent: {0}")]
    BadTable(&'static str),
    #[error("distortions must be non-negative and finite")]
    NegativeDistortion,
    #[error("curves were swept on different lambda grids")]
    GridMismatch,
    #[error("rate threshold {threshold} bits is below the lowest swept rate {min_rate}")]
    RateBelowCurve { threshold: u64, min_rate: u64 },
    #[error("QP {0} outside 0..=51")]
    QpOutOfRange(i64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("noise sigma must be finite and >= 0, got {0}")]
    BadNoiseSigma(f64),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
