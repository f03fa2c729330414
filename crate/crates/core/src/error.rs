use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The integration step is too coarse for the Hamiltonian norm.
    #[error("step {step:.3e} too coarse: ‖H‖·step = {product:.3e} exceeds {limit}")]
    Resolution { step: f64, product: f64, limit: f64 },

    #[error("numerical derivative failed: hermiticity residual {residual:.3e}")]
    NumericalDerivative { residual: f64 },

    #[error("unknown formula id `{0}`")]
    UnknownFormula(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
