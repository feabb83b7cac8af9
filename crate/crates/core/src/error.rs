use thiserror::Error;

/// Errors produced by the estimation library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no data")]
    NoData,

    #[error("bad bandwidth: {0}")]
    BadBandwidth(f64),

    #[error("not a convex combination: weights sum to {0}")]
    NotConvex(f64),

    #[error("degenerate quadrant: probability {0} is not strictly positive")]
    DegenerateQuadrant(f64),

    #[error("shift bound must be at least 1, got {0}")]
    ShiftBound(i64),

    #[error("grid [{lo}, {hi}] is not commensurate with {count_per_unit} nodes per unit")]
    NonCommensurateGrid { lo: f64, hi: f64, count_per_unit: u32 },

    #[error("kernel under-resolved: {count_per_unit} nodes per unit times bandwidth {bandwidth} is below {min_nodes}")]
    UnderResolved {
        count_per_unit: u32,
        bandwidth: f64,
        min_nodes: f64,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("row {row}: {message}")]
    Parse { row: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error was caused by user input (bad flags, bad data) as
    /// opposed to an internal failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Json(_))
            && !matches!(self, Error::Io(e) if e.kind() != std::io::ErrorKind::NotFound)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
