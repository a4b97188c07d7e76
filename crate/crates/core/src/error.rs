use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Which side of the no-arbitrage band an option price fell outside of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceBound {
    /// Price at or below intrinsic value (or the minimum-volatility price).
    Lower(f64),
    /// Price at or above the spot.
    Upper(f64),
}

impl fmt::Display for PriceBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriceBound::Lower(b) => write!(f, "price must exceed lower bound {b}"),
            PriceBound::Upper(b) => write!(f, "price must be below upper bound {b}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("chain initialization failed: {reason}\n{state}")]
    Initialization { reason: String, state: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degenerate window at day {day}, knot {knot}: {flagged} of {len} returns exceed the threshold")]
    DegenerateWindow {
        day: usize,
        knot: usize,
        flagged: usize,
        len: usize,
    },

    #[error("no implied volatility: {0}")]
    NoSolution(PriceBound),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
