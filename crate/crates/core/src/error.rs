use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid site space: {0}")]
    InvalidSpace(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel is not Hermitian in the weighted inner product (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("top eigenvalue {lambda_max} exceeds 1 - epsilon = {bound} after rescaling")]
    StrictnessViolated { lambda_max: f64, bound: f64 },

    #[error("1 - K is numerically singular (spectral margin {margin:e})")]
    SingularInverse { margin: f64 },

    #[error("{n} sites exceed the enumeration limit of {limit}")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("site {site} is already occupied")]
    SiteOccupied { site: usize },

    #[error("site {site} is not occupied")]
    SiteVacant { site: usize },

    #[error("configuration has zero density (det J_gamma = 0)")]
    SingularConfiguration,

    #[error("invalid rate family: {0}")]
    InvalidFamily(String),

    #[error("near-singular intensity: rate {rate:e} exceeds the ceiling {ceiling:e}")]
    RateOverflow { rate: f64, ceiling: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("generator is not reversible with respect to the measure (residual {residual:e})")]
    NotReversible { residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("empty averaging window")]
    EmptyWindow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures caused by floating point trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RateOverflow { .. }
                | Error::NumericalBreakdown(_)
                | Error::SingularInverse { .. }
                | Error::SingularConfiguration
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
