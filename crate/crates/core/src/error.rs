use std::fmt;

use serde::Serialize;

/// Errors produced by the library. CLI exit codes are derived from
/// [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("exponent p = {0} is outside (1, inf)")]
    InvalidExponent(f64),

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("requested {requested} vectors but only {available} fit")]
    Capacity { requested: usize, available: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient cluster: {0}")]
    InsufficientCluster(Box<ClusterDiagnostics>),

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// 1 = certificate or verification failure, 2 = bad configuration,
    /// 3 = data-dependent shortfall.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Certificate(_) | Error::Numerical(_) => 1,
            Error::InsufficientCluster(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Best window found when no window held two or more points, together with
/// the pigeonhole numbers that say how many points would have forced success.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDiagnostics {
    pub width: f64,
    pub best_lo: f64,
    pub best_hi: f64,
    pub best_count: usize,
    pub points: usize,
    /// Bound on |<v_n, x*>| over the sequence.
    pub value_range: f64,
    pub window_count: usize,
    pub points_for_guarantee: usize,
}

impl ClusterDiagnostics {
    pub(crate) fn new(width: f64, lo: f64, hi: f64, count: usize, points: usize, range: f64) -> Self {
        let window_count = ((2.0 * range) / width).ceil().max(1.0) as usize;
        ClusterDiagnostics {
            width,
            best_lo: lo,
            best_hi: hi,
            best_count: count,
            points,
            value_range: range,
            window_count,
            points_for_guarantee: window_count.saturating_add(1),
        }
    }
}

impl fmt::Display for ClusterDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "best window [{}, {}] of width {} holds {} of {} points; values lie in [-{}, {}], \
             so {} windows cover them and {} points guarantee a pair",
            self.best_lo,
            self.best_hi,
            self.width,
            self.best_count,
            self.points,
            self.value_range,
            self.value_range,
            self.window_count,
            self.points_for_guarantee
        )
    }
}
