use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("|D_x|^-1 applied to a field with nonzero mean (zero-mode coefficient {0:e})")]
    NonzeroMean(f64),

    #[error("non-finite value at mode index {mode}")]
    NonFinite { mode: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("only {found} modes above the floor inside the fit window, need {required}")]
    InsufficientModes { found: usize, required: usize },

    #[error("profile too wide for the grid: boundary amplitude is {ratio:e} of the peak")]
    ScaleTooSmall { ratio: f64 },

    #[error("zero mode of the wave data is nonzero ({0:e}) but no zero-mode carry was requested")]
    ZeroModeNotCarried(f64),

    #[error("evolution aborted at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("Picard iteration did not converge in {iterations} iterations (ratios {ratios:?})")]
    NoConvergence { iterations: usize, ratios: Vec<f64> },

    #[error("quadrature resolution insufficient: {0}")]
    Resolution(String),

    #[error("sample set is empty")]
    EmptySampleSet,
}
