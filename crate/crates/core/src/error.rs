use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected a {expected}-dimensional field, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("axis {axis} has {len} cells, at least {min} required")]
    ShapeTooSmall { axis: usize, len: usize, min: usize },

    #[error("value buffer has {found} entries, grid requires {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("curl max-norm {max_curl:.3e} exceeds tolerance {tolerance:.3e}")]
    CurlTooLarge { max_curl: f64, tolerance: f64 },

    #[error("line integrals disagree between path orders by {max_diff:.3e} (tolerance {tolerance:.3e})")]
    PathMismatch { max_diff: f64, tolerance: f64 },

    #[error("current {current:.3e} at cell {cell} where the density is below its floor")]
    UnsupportedCurrent { cell: usize, current: f64 },

    #[error("invalid convex weights: {0}")]
    InvalidWeights(String),

    #[error("lambda = {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("density pair is not a validated N-representable pair: {0}")]
    NotValidated(String),

    #[error("operation requires N = {expected}, got N = {found}")]
    ParticleNumber { expected: usize, found: usize },

    #[error("eigensolver did not converge: residual {residual:.3e} > {tolerance:.3e}")]
    NonConvergence { residual: f64, tolerance: f64 },

    #[error("ground state is degenerate: gap {gap:.3e} < {tolerance:.3e}")]
    DegenerateGroundState { gap: f64, tolerance: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Format(_)
            | Error::Config(_) => 3,
            _ => 2,
        }
    }
}
