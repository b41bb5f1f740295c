use thiserror::Error;

/// Errors raised by the kinetic and fluid solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonpositive density {rho:e} in cell {cell}")]
    NonpositiveDensity { cell: usize, rho: f64 },

    #[error("nonpositive temperature {temperature:e} in cell {cell}")]
    NonpositiveTemperature { cell: usize, temperature: f64 },

    #[error("temperature tensor is not positive definite in cell {cell} (leading minors {minors:?})")]
    NonSpdTensor { cell: usize, minors: Vec<f64> },

    #[error("reconstruction stencil needs {needed} ghost cells, only {available} available")]
    StencilOutOfRange { needed: usize, available: usize },

    #[error("constraint gram matrix is singular")]
    SingularGram,

    #[error("multistep scheme needs {needed} past fields, history holds {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("fluid vacuum or negative pressure in cell {cell}")]
    FluidVacuum { cell: usize },

    #[error("step {step} (t = {time:e}): {source}")]
    AtStep {
        step: usize,
        time: f64,
        #[source]
        source: Box<SolverError>,
    },

    #[error("i/o: {0}")]
    Io(String),
}

impl SolverError {
    pub(crate) fn at_step(self, step: usize, time: f64) -> Self {
        match self {
            e @ SolverError::AtStep { .. } => e,
            e => SolverError::AtStep {
                step,
                time,
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

impl From<csv::Error> for SolverError {
    fn from(e: csv::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for SolverError {
    fn from(e: serde_json::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
