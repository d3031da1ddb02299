use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero ray")]
    ZeroRay,
    #[error("duplicate ray {0}")]
    DuplicateRay(String),
    #[error("degenerate ray set")]
    DegenerateRaySet,
    #[error("non-simplicial facet, explicit max_cones required")]
    NonSimplicialFacet,
    #[error("irregular cone")]
    IrregularCone,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("maximal cone {0} must have exactly {1} rays")]
    ConeSize(usize, usize),
    #[error("matrix is not unimodular")]
    NotUnimodular,
    #[error("group closure exceeded bound {0}")]
    ClosureBoundExceeded(usize),
    #[error("not a smooth toric Fano fan: {0}")]
    NotSmoothFano(String),
    #[error("coordinate does not fit in a machine word")]
    CoordinateOverflow,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-positive weight {0}")]
    NonPositiveWeight(f64),
    #[error("weights are not invariant under the symmetry group")]
    NonInvariantWeights,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
}
