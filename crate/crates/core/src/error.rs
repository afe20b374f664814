use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("negative radicand {radicand:e} for mode n = {n}")]
    NegativeRadicand { n: u32, radicand: f64 },

    #[error("mode system singular at n = {n} (pivot {pivot:e})")]
    SingularModeSystem { n: u32, pivot: f64 },

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("problem size {size} exceeds dense cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last update {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("energy fell by a factor of only {ratio:.3e} over the trace")]
    InsufficientDecay { ratio: f64 },

    #[error("majorant inequality fails at s = {s:e}")]
    InvalidMajorant { s: f64 },

    #[error("sequence premise violated at index {index}")]
    PremiseViolated { index: usize },

    #[error("degenerate run: {0}")]
    DegenerateRun(String),

    #[error("operator not skew in energy coordinates (residual {residual:e})")]
    NotSkewInEnergyCoords { residual: f64 },

    #[error("pair is not exponentially stable (spectral abscissa {abscissa:e})")]
    NotExponentiallyStable { abscissa: f64 },

    #[error("pair is not observable at T = {t} (smallest Gramian eigenvalue {min_eig:e})")]
    NotObservableAtT { t: f64, min_eig: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
