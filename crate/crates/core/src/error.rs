use thiserror::Error;

/// Errors raised by the navigation engine, its detectors and its I/O layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate attitude: pitch {pitch} rad is within 1e-6 of +-pi/2")]
    DegenerateAttitude { pitch: f64 },

    #[error("degenerate window: mean specific force has zero norm")]
    DegenerateWindow,

    #[error("window holds {got} samples, expected {expected}")]
    WindowLength { expected: usize, got: usize },

    #[error("specific force norm {norm} m/s^2 is too small for a tilt measurement")]
    LowGravity { norm: f64 },

    #[error("horizontal magnetic field vanishes; heading undefined")]
    UndefinedHeading,

    #[error("no measurement rows available for the update")]
    NoMeasurement,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("input stream is empty")]
    EmptyStream,

    #[error("timestamps must be strictly increasing (sample {index}: {prev} -> {next})")]
    NonMonotonicTime { index: usize, prev: f64, next: f64 },

    #[error("variant {variant} needs magnetometer data, but sample {index} has none")]
    MissingMagnetometer { variant: String, index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
