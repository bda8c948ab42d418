use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label overflow: {map} at ({x}, {y}) exceeds the exact 64-bit range")]
    LabelOverflow { map: String, x: u64, y: u64 },

    #[error("{what}: requested {requested} exceeds the budget of {limit}")]
    Budget {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("coordinatewise injectivity violated: S({x}, {y}) = S({x2}, {y}) with {x} != {x2}")]
    InjectivityViolation { x: u64, x2: u64, y: u64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("degenerate truncation: sigma(u) = 0 at u = {0}")]
    DegenerateTruncation(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Checks `requested <= limit`, returning a budget error otherwise.
    pub fn check_budget(what: &'static str, requested: u128, limit: u128) -> Result<()> {
        if requested > limit {
            Err(Error::Budget {
                what,
                requested,
                limit,
            })
        } else {
            Ok(())
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}

/// `base^exp` saturating at `u128::MAX`, for budget checks.
pub(crate) fn pow_saturating(base: u64, exp: u32) -> u128 {
    (base as u128).checked_pow(exp).unwrap_or(u128::MAX)
}
