use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {field}: {message}")]
    InvalidParam { field: &'static str, message: String },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("string of length {len} shorter than required {required}")]
    TooShort { len: usize, required: usize },

    #[error("shift support {max_shift} must be smaller than the string length {len}")]
    ShiftExceedsString { max_shift: usize, len: usize },

    #[error("evaluation point at the pole of the inverse Mobius map")]
    MobiusPole,

    #[error("normalization factor {value:e} too small to invert")]
    NormalizationUnderflow { value: f64 },

    #[error("no sub-interval of the window is finely well-behaved for k={k}")]
    NotFinelyWellBehaved { k: usize },

    #[error("arc scale a={a} too large: no split index lands the partial-sum window in [20,21]")]
    ArcScaleTooLarge { a: f64 },

    #[error("no separation point found: grid maximum {max} below floor {floor}")]
    NoSeparation { max: f64, floor: f64 },

    #[error("both template candidates have a period <= {max_period}")]
    BothCandidatesPeriodic { max_period: usize },

    #[error("degree {degree} out of range for grid with {nodes} nodes")]
    DegreeOutOfRange { degree: usize, nodes: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed pool file: {0}")]
    PoolFormat(String),
}
