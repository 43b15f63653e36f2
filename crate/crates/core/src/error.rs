use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("equilibrium search did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    EquilibriumNotConverged { iterations: usize, grad_norm: f64 },

    #[error("ions {first} and {second} occupy coincident or unordered positions")]
    CoincidentPositions { first: usize, second: usize },

    #[error("radial mode {mode} is unstable (eigenvalue {eigenvalue:e})")]
    UnstableMode { mode: usize, eigenvalue: f64 },

    #[error("laser detuning {detuning:e} rad/s is resonant with mode {mode} at {frequency:e} rad/s")]
    Resonance { mode: usize, detuning: f64, frequency: f64 },

    #[error("hyperparameter A[{index}] = {value} lies outside [-1, 1]")]
    HyperparameterDomain { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate spectrum: lambda_max equals lambda_0 ({value})")]
    DegenerateSpectrum { value: f64 },

    #[error("cost is not finite at grid point ({row}, {col}) = {point:?}")]
    NonFiniteCost { row: usize, col: usize, point: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether the error comes from input validation rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::HyperparameterDomain { .. }
                | Error::DimensionMismatch { .. }
        )
    }

    /// Whether the error reports a numerical failure of the physics or the
    /// optimizers.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EquilibriumNotConverged { .. }
                | Error::CoincidentPositions { .. }
                | Error::UnstableMode { .. }
                | Error::Resonance { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::NonFiniteCost { .. }
        )
    }
}
