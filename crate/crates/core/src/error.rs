use thiserror::Error;

use crate::momentum::Phase;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("bracket [{lo}, {hi}] does not straddle the phase boundary: both ends are {lo_phase:?}/{hi_phase:?}")]
    Bracket {
        lo: f64,
        hi: f64,
        lo_phase: Phase,
        hi_phase: Phase,
    },

    #[error("power-law fit needs at least 3 usable points, got {usable} ({dropped} non-positive values dropped)")]
    Fit { usable: usize, dropped: usize },

    #[error("state norm underflow ({0:e})")]
    Underflow(f64),

    #[error("dense oracle is limited to N <= {max}, got N = {n}")]
    SizeGuard { n: usize, max: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
