use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("{0} must be finite")]
    NonFinite(&'static str),

    #[error(
        "point is {dlat:.4} deg lat / {dlon:.4} deg lon from the local origin; \
         the planar frame is only valid within 0.1 deg"
    )]
    OutsideLocalArea { dlat: f64, dlon: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("duplicate trace timestamp {t_ms} ms")]
    DuplicateTimestamp { t_ms: i64 },

    #[error("trace gap of {} ms between {from_ms} and {to_ms} exceeds 10 s", to_ms - from_ms)]
    TraceGap { from_ms: i64, to_ms: i64 },

    #[error("trace spans {span_ms} ms, needs at least {needed_ms} ms")]
    TraceTooShort { span_ms: i64, needed_ms: i64 },

    #[error("interval must be positive, got {0} ms")]
    InvalidInterval(i64),

    #[error("traces overlap for {overlap_ms} ms, need at least 1000 ms")]
    NoOverlap { overlap_ms: i64 },

    #[error("frequency must be positive, got {0} Hz")]
    InvalidFrequency(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("obstacle {id}: {reason}")]
    DegenerateObstacle { id: String, reason: String },

    #[error("duplicate station id {0}")]
    DuplicateStationId(u32),

    #[error("trace file not found: {}", .0.display())]
    MissingTrace(PathBuf),

    #[error("scenario has no RSUs")]
    NoRsus,

    #[error("drop probability must lie in [0, 1], got {0}")]
    DropProbability(f64),

    #[error("unsupported capture format (magic 0x{magic:08x}); only classic pcap is read")]
    UnsupportedFormat { magic: u32 },

    #[error("link type {0} is not radiotap (127)")]
    LinkType(u32),

    #[error("packet {index} is truncated")]
    TruncatedPacket { index: usize },

    #[error("capture {index} has no station id and no address mapping matched")]
    MissingStationId { index: usize },

    #[error("sample is empty")]
    EmptySample,

    #[error("baseline message count is zero")]
    ZeroBaseline,

    #[error("station {0} is not part of the scenario")]
    UnknownStation(u32),

    #[error("no {0} records")]
    EmptySource(&'static str),

    #[error("parameter space has {points} points, budget is {budget}")]
    BudgetExceeded { points: usize, budget: usize },

    #[error("no lattice point produced a usable simulation")]
    NoFeasiblePoint,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by how the tool was invoked rather than by its input data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. } | Error::DropProbability(_) | Error::InvalidInterval(_)
        )
    }
}
