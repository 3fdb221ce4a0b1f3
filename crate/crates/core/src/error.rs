use thiserror::Error;

use crate::grid::Rect;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("malformed box `{0}` (expected `x0:x1,y0:y1` with x0 <= x1, y0 <= y1)")]
    MalformedBox(String),

    #[error("malformed event `{0}`")]
    MalformedEvent(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("update region {region} lacks a one-site margin around {active}")]
    InsufficientMargin { region: Rect, active: Rect },

    #[error("no coalescence up to depth {cap} (beta too large, or a bug)")]
    NoCoalescence { cap: u32 },

    #[error("majority scan exceeded n = {cap} at ({x}, {y})")]
    MajorityCap { cap: u32, x: i64, y: i64 },

    #[error("box has {vertices} vertices; exact enumeration is limited to {limit}")]
    TooLarge { vertices: usize, limit: usize },

    #[error("event is not increasing: flipping site {site} from -1 to +1 leaves the event")]
    NotIncreasing { site: usize },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("non-monotone crossing probabilities at h = {h_low} vs h = {h_high}")]
    NonMonotone { h_low: f64, h_high: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
