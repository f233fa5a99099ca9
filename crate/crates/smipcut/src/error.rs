use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported by oracle: {0}")]
    UnsupportedByOracle(String),
    #[error("cut is not tight at its anchor (gap {0:e})")]
    NotTight(f64),
    #[error("anchor is not binary; use lambda_shaped_cut for general integer anchors")]
    NonBinaryAnchor,
    #[error("anchor has non-integer coordinates")]
    NonIntegerAnchor,
    #[error("reverse-norm cut needs a Lipschitz constant")]
    MissingLipschitz,
    #[error("scenario {0} recourse problem is infeasible (relatively complete recourse violated)")]
    RecourseInfeasible(usize),
    #[error("first-stage problem is infeasible")]
    MasterInfeasible,
    #[error("no finite rho found below the search cap")]
    NoFiniteRho,
    #[error("point lies outside the convex hull of the table")]
    OutsideHull,
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
