use alloc::boxed::Box;
use alloc::string::String;

/// Coarse failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Spectral,
    Rank,
    Estimation,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix {what} is not Hermitian (defect {defect:.3e})")]
    NotHermitian { what: &'static str, defect: f64 },
    #[error("eigenvalue within {tol:.3e} of the imaginary axis (min |Re| = {min_re:.3e})")]
    ImaginaryEigenvalue { min_re: f64, tol: f64 },
    #[error("rank deficient: sigma_min {sigma_min:.3e} <= {threshold:.3e}")]
    RankDeficient { sigma_min: f64, threshold: f64 },
    #[error("sign iteration did not converge in {iterations} steps (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("Schur decomposition failed to converge")]
    SchurFailed,
    #[error("near-singular shifted system at node {node} (z = {re:.6e}{im:+.6e}i)")]
    NodeSingular { node: usize, re: f64, im: f64 },
    #[error("shifted contour at theta = {theta:.6e} touches the spectrum")]
    StripTooWide { theta: f64 },
    #[error("singular value {sigma_min:.3e} below 1/kappa = {bound:.3e}")]
    ConditionViolated { sigma_min: f64, bound: f64 },
    #[error("node {node} (z = {re:.6e}{im:+.6e}i): singular value {sigma_min:.3e} below 1/kappa = {bound:.3e}")]
    NodeCondition { node: usize, re: f64, im: f64, sigma_min: f64, bound: f64 },
    #[error("singular value {sigma_max:.3e} above 1 after normalization")]
    NormViolated { sigma_max: f64 },
    #[error("inverse polynomial missed tolerance: grid error {achieved:.3e} > {target:.3e} at degree {degree}")]
    PolynomialTolerance { achieved: f64, target: f64, degree: usize },
    #[error("RPA instability: eigenvalue with imaginary part {imag:.3e}")]
    RpaInstability { imag: f64 },
    #[error("estimation precondition: eps_T = {eps_t:.3e} exceeds {required:.3e}")]
    EstimationPrecondition { eps_t: f64, required: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{what} = {value} exceeds cap {cap}")]
    OverCap { what: &'static str, value: usize, cap: usize },
    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost stage name, if the error was annotated.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, source } => Some(source.stage().unwrap_or(stage)),
            _ => None,
        }
    }

    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self.root() {
            Error::ImaginaryEigenvalue { .. }
            | Error::NodeSingular { .. }
            | Error::StripTooWide { .. }
            | Error::RpaInstability { .. }
            | Error::SchurFailed => ErrorClass::Spectral,
            Error::RankDeficient { .. }
            | Error::Singular(_)
            | Error::NoConvergence { .. }
            | Error::ConditionViolated { .. }
            | Error::NodeCondition { .. }
            | Error::NormViolated { .. }
            | Error::PolynomialTolerance { .. } => ErrorClass::Rank,
            Error::EstimationPrecondition { .. } => ErrorClass::Estimation,
            _ => ErrorClass::Input,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
