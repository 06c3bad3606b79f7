use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid hypothesis statistics: {0}")]
    InvalidStats(String),
    #[error("receive filter is zero")]
    InvalidFilter,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("denominator matrix is not positive definite")]
    SingularDenominator,
    #[error("feasible set is empty")]
    Infeasible,
    #[error("no sign change on [{lo}, {hi}]")]
    BracketError { lo: f64, hi: f64 },
    #[error("matrix is zero")]
    ZeroMatrix,
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("design is infeasible: {0}")]
    InfeasibleDesign(String),
    #[error("sensing constraint cannot be met at the current receive filter")]
    SensingInfeasible,
    #[error("degenerate test: hypotheses coincide")]
    DegenerateTest,
}

pub type Result<T> = std::result::Result<T, Error>;
