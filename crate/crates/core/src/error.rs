use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A thermodynamic closure was evaluated outside its domain (nonpositive density).
    #[error("density must be positive, got {rho}")]
    NonPositiveDensity { rho: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fields live on different meshes or have different degrees")]
    MeshMismatch,

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("density lost positivity in cell {cell} near x = {x:.6}")]
    DensityPositivityLoss { cell: usize, x: f64 },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("case {label} failed: {source}")]
    Case {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep only its message.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

impl Error {
    /// True when the error came from the nonlinear solver rather than from the setup.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. }
            | Error::DensityPositivityLoss { .. }
            | Error::LinearSolver(_)
            | Error::NonPositiveDensity { .. } => true,
            Error::Step { source, .. } | Error::Case { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
