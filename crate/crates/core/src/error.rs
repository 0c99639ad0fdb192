use thiserror::Error;

/// Errors raised by model construction and the partitioning pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlyError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("polygon is degenerate (area {0:e})")]
    Degenerate(f64),
    #[error("polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("fiber angle {0} is outside [0, pi)")]
    BadAngle(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty layup")]
    EmptyLayup,
    #[error("missing branch for {0}")]
    MissingBranch(String),
    #[error("unknown ply id `{0}`")]
    UnknownPly(String),
    #[error("piece {id} is wider than the spool ({width} > {spool})")]
    PieceTooWide { id: String, width: f64, spool: f64 },
    #[error("every spool width in the sweep was infeasible")]
    SweepInfeasible,
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
}

pub type Result<T> = std::result::Result<T, PlyError>;
