use thiserror::Error;

/// Every fallible operation in the crate returns this.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus {0}: must be at least 2")]
    InvalidModulus(usize),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "search budget exceeded: {candidates} candidates > limit {limit} (use randomized search)"
    )]
    BudgetExceeded { candidates: u128, limit: u128 },

    #[error("grid under-resolves the mode: {0}")]
    Resolution(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error(
        "target amplitude exceeds the input envelope: ratio {ratio:.6} at ({x:.3e}, {y:.3e}) m"
    )]
    AmplitudeExceedsInput { ratio: f64, x: f64, y: f64 },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("peak {loop_index} lies outside the histogram span")]
    Range { loop_index: usize },

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("tomography inversion failed: {0}")]
    Inversion(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Normalization(_) | Error::Inversion(_) | Error::Fit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
