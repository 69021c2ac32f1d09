use thiserror::Error;

/// Errors raised by the functional outlier detection routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("NonFiniteValue: non-finite entry at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("RaggedRows: row {row} has {found} values, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("NonIncreasingGrid: grid point {index} is not greater than its predecessor")]
    NonIncreasingGrid { index: usize },

    #[error("DegenerateInterval: need a < b and at least 2 points (got a = {a}, b = {b}, p = {points})")]
    DegenerateInterval { a: f64, b: f64, points: usize },

    #[error("GridMismatch: sample has {values} columns but the grid has {grid} points")]
    GridMismatch { values: usize, grid: usize },

    #[error("EmptySample: a sample needs at least one curve and one dimension")]
    EmptySample,

    #[error("TooFewCurves: need at least {required} curves, got {found}")]
    TooFewCurves { required: usize, found: usize },

    #[error("TooFewPoints: need at least {required} points, got {found}")]
    TooFewPoints { required: usize, found: usize },

    #[error("InvalidTail: tail probability {0} must lie in (0, 0.5)")]
    InvalidTail(f64),

    #[error("EmptyInput: statistic of an empty sequence")]
    EmptyInput,

    #[error("NonConvergence: no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("SingularSubsets: every candidate subset has a singular covariance")]
    SingularSubsets,

    #[error("SingularCovariance: covariance is singular even after regularization")]
    SingularCovariance,

    #[error("InvalidLevel: tail level {0} must lie in (0, 1)")]
    InvalidLevel(f64),

    #[error("InvalidCoverage: coverage {0} must lie in [0.5, 1]")]
    InvalidCoverage(f64),

    #[error("BadWeights: {0}")]
    BadWeights(String),

    #[error("BadCentralRegion: central region {0} must lie in (0, 1)")]
    BadCentralRegion(f64),

    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),

    #[error("EmptySequence: the transformation sequence is empty")]
    EmptySequence,

    #[error("OOnUnivariate: the O transformation requires multivariate input")]
    OOnUnivariate,

    #[error("MultivariateStage: stage {0} requires univariate data; apply O first")]
    MultivariateStage(String),

    #[error("UnknownDepthMethod: {0}")]
    UnknownDepthMethod(String),

    #[error("UnknownStage: {0}")]
    UnknownStage(String),

    #[error("AllDegenerate: every curve has zero variance")]
    AllDegenerate,

    #[error("CovarianceNotPD: covariance matrix is not positive definite after jitter")]
    CovarianceNotPD,

    #[error("BadRate: outlier rate {0} must lie in [0, 1]")]
    BadRate(f64),

    #[error("BadModel: simulation model {0} does not exist (expected 1..=9)")]
    BadModel(usize),
}

impl FdError {
    /// Short variant name, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            FdError::NonFiniteValue { .. } => "NonFiniteValue",
            FdError::RaggedRows { .. } => "RaggedRows",
            FdError::NonIncreasingGrid { .. } => "NonIncreasingGrid",
            FdError::DegenerateInterval { .. } => "DegenerateInterval",
            FdError::GridMismatch { .. } => "GridMismatch",
            FdError::EmptySample => "EmptySample",
            FdError::TooFewCurves { .. } => "TooFewCurves",
            FdError::TooFewPoints { .. } => "TooFewPoints",
            FdError::InvalidTail(_) => "InvalidTail",
            FdError::EmptyInput => "EmptyInput",
            FdError::NonConvergence { .. } => "NonConvergence",
            FdError::SingularSubsets => "SingularSubsets",
            FdError::SingularCovariance => "SingularCovariance",
            FdError::InvalidLevel(_) => "InvalidLevel",
            FdError::InvalidCoverage(_) => "InvalidCoverage",
            FdError::BadWeights(_) => "BadWeights",
            FdError::BadCentralRegion(_) => "BadCentralRegion",
            FdError::InvalidParameter(_) => "InvalidParameter",
            FdError::EmptySequence => "EmptySequence",
            FdError::OOnUnivariate => "OOnUnivariate",
            FdError::MultivariateStage(_) => "MultivariateStage",
            FdError::UnknownDepthMethod(_) => "UnknownDepthMethod",
            FdError::UnknownStage(_) => "UnknownStage",
            FdError::AllDegenerate => "AllDegenerate",
            FdError::CovarianceNotPD => "CovarianceNotPD",
            FdError::BadRate(_) => "BadRate",
            FdError::BadModel(_) => "BadModel",
        }
    }

    /// True for failures of a numerical procedure on otherwise valid input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            FdError::NonConvergence { .. }
                | FdError::SingularSubsets
                | FdError::SingularCovariance
                | FdError::AllDegenerate
                | FdError::CovarianceNotPD
        )
    }
}

pub type Result<T> = std::result::Result<T, FdError>;
