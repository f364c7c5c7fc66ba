use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimension {0} is odd")]
    OddDimension(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symplectic (defect {residual:e})")]
    NotSymplectic { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("path must start at t = 0 with the identity")]
    BadStart,
    #[error("path sample times must be strictly increasing")]
    NotIncreasing,
    #[error("a path needs at least two samples")]
    TooFewSamples,
    #[error("parameter intervals differ: {0} vs {1}")]
    IntervalMismatch(f64, f64),
    #[error("eigenvalues cannot be matched into symplectic pairs: {0}")]
    PairingFailure(String),
    #[error("quadratic form is degenerate (eigenvalue {0:e})")]
    DegenerateForm(f64),
    #[error("adaptive refinement exhausted near t = {0}")]
    RefinementExhausted(f64),
    #[error("path endpoint has an eigenvalue within tolerance of 1")]
    DegenerateEndpoint,
    #[error("degenerate crossing form at t = {0}")]
    IrregularCrossing(f64),
    #[error("leaf frame loses rank at sample {0}")]
    FrameRankLoss(usize),
    #[error("leaf frame is not tangent to the characteristic foliation at sample {0} (residual {1:e})")]
    FrameNotTangent(usize, f64),
    #[error("frame of an orientable loop does not close up (defect {0:e})")]
    FrameNotClosed(f64),
    #[error("loop class {0:?} is not contractible in the ambient space")]
    NotContractibleInAmbient(Vec<i64>),
    #[error("bad homotopy class {0:?}: {1}")]
    BadClass(Vec<i64>, String),
    #[error("holonomy projection loses rank: {0}")]
    ProjectionRankLoss(String),
    #[error("trajectory left the normal-form chart at t = {0}")]
    LeftChart(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("profile slope {0} lies in the length spectrum")]
    SlopeInSpectrum(f64),
    #[error("C = {0} lies in r·S")]
    CInSpectrumScaled(f64),
    #[error("no witness loop found among {0} candidates")]
    NoWitnessFound(usize),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Short machine-readable tag used by the CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OddDimension(_) => "odd_dimension",
            Error::NotSquare { .. } => "not_square",
            Error::NotSymplectic { .. } => "not_symplectic",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BadStart => "bad_start",
            Error::NotIncreasing => "not_increasing",
            Error::TooFewSamples => "too_few_samples",
            Error::IntervalMismatch(..) => "interval_mismatch",
            Error::PairingFailure(_) => "pairing_failure",
            Error::DegenerateForm(_) => "degenerate_form",
            Error::RefinementExhausted(_) => "refinement_exhausted",
            Error::DegenerateEndpoint => "degenerate_endpoint",
            Error::IrregularCrossing(_) => "irregular_crossing",
            Error::FrameRankLoss(_) => "frame_rank_loss",
            Error::FrameNotTangent(..) => "frame_not_tangent",
            Error::FrameNotClosed(_) => "frame_not_closed",
            Error::NotContractibleInAmbient(_) => "not_contractible_in_ambient",
            Error::BadClass(..) => "bad_class",
            Error::ProjectionRankLoss(_) => "projection_rank_loss",
            Error::LeftChart(_) => "left_chart",
            Error::InvalidModel(_) => "invalid_model",
            Error::BadParameters(_) => "bad_parameters",
            Error::SlopeInSpectrum(_) => "slope_in_spectrum",
            Error::CInSpectrumScaled(_) => "c_in_spectrum_scaled",
            Error::NoWitnessFound(_) => "no_witness_found",
            Error::Format(_) => "format",
        }
    }
}
