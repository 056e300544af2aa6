use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid grid, parameters or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Operands that cannot be combined (grid or domain mismatch).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported observable: {0}")]
    Unsupported(String),

    /// A numerical result failed its convergence or refinement gate.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("empty level set: {0}")]
    NoSupport(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    /// A monitored invariant drifted beyond tolerance during time stepping.
    #[error("integration accuracy error at step {step}: {monitor} drifted by {drift:.3e}")]
    Integration { step: usize, monitor: String, drift: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::Unsupported(_) => "unsupported",
            Error::Accuracy(_) => "accuracy",
            Error::NoSupport(_) => "no_support",
            Error::Calibration(_) => "calibration",
            Error::Integration { .. } => "integration",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit status: 2 for bad input, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Unsupported(_) | Error::NoSupport(_) | Error::Json(_) => 2,
            Error::Accuracy(_) | Error::Calibration(_) | Error::Integration { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}
