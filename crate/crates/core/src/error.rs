use thiserror::Error;

/// Errors raised by the physics layers (parameters, transform, resonance, oracle).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("scale factor R({t}) = {r} is not positive")]
    NonPositiveScale { t: f64, r: f64 },

    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error(
        "second channel is open at energy {energy} (offset {offset}); \
         the Green's function is complex, set `v0_override` instead"
    )]
    OpenChannel { energy: f64, offset: f64 },

    #[error("grid under-resolved: {points_per_wavelength:.2} points per wavelength, need at least 16")]
    UnderResolved { points_per_wavelength: f64 },

    #[error("norm drift {drift:e} in a single step exceeds 1e-6")]
    SolverDiverged { drift: f64 },

    #[error("delta position {position} lies outside the grid (length {length})")]
    DomainExceeded { position: f64, length: f64 },

    #[error("decay fit needs at least 10 positive samples in the window, found {found}")]
    InsufficientSamples { found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
