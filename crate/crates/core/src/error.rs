use thiserror::Error;

pub type Result<T, E = NvError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NvError {
    /// A physical parameter is outside its admissible range.
    #[error("{name} = {value:e} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Too few quadrature nodes inside a probe region.
    #[error("probe region resolved by only {nodes} unmasked nodes (need at least {required})")]
    Resolution { nodes: usize, required: usize },

    #[error("probe region is {percent:.1}% masked (limit 20%)")]
    MaskedRegion { percent: f64 },

    #[error("probe region does not fit inside the field map: {0}")]
    OutsideMap(String),

    #[error("mixed PL regimes in fit window")]
    MixedRegime,

    #[error("{0}")]
    Unsupported(String),

    #[error("empty search grid")]
    EmptySearch,

    #[error("line {line}: {key}: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },
}

impl NvError {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        NvError::Domain {
            name,
            value,
            reason,
        }
    }

    /// True for failures of the numerics (resolution, masking) as opposed to
    /// bad user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            NvError::Resolution { .. } | NvError::MaskedRegion { .. } | NvError::MixedRegime
        )
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(NvError::domain(name, value, "must be finite and positive"))
    }
}
