use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid probability grid: {0}")]
    InvalidProbGrid(String),

    #[error("value at index {index} is {value}, expected a nondecreasing sequence in [0, 1]")]
    NotMonotone { index: usize, value: f64 },

    #[error("functions are defined on incompatible grids")]
    GridMismatch,

    #[error("bands are evaluated on different probability grids")]
    ProbGridMismatch,

    #[error("band edges cross: lower {lower} > upper {upper} at grid index {index}")]
    CrossedBand { index: usize, lower: f64, upper: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("total weight is zero")]
    ZeroWeight,

    #[error("all indicators are {}", if *.all_below { "one" } else { "zero" })]
    DegenerateIndicators { all_below: bool },

    #[error("solver did not converge after {iterations} iterations (gradient sup-norm {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        coefficients: Vec<f64>,
    },

    #[error("singular information matrix")]
    Singular,

    #[error("unknown covariate column `{0}`")]
    UnknownColumn(String),

    #[error("covariate row does not match the design: {0}")]
    NonConformable(String),

    #[error("every grid point has a zero standard error; no critical value can be formed")]
    AllPointsExcluded,

    #[error("denominator band is not strictly positive at probability index {index} (lower end {value})")]
    NonPositiveDenominator { index: usize, value: f64 },

    #[error("bootstrap draw {draw} failed: {source}")]
    Draw {
        draw: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid simulation design: {0}")]
    InvalidDesign(String),
}

impl Error {
    /// True when the error originates in a numerical routine rather than in
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::Singular | Error::AllPointsExcluded => true,
            Error::Draw { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
