use thiserror::Error;

use crate::dynamics::DynTrajectory;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no lattice vertex lies inside the domain at this mesh size")]
    EmptyApproximation,
    #[error("vertex is not part of the domain")]
    UnknownVertex,
    #[error("arc endpoints coincide")]
    SamePosition,
    #[error("enumeration cap exceeded: n = {n} > cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("Boltzmann sample exceeded the vertex budget {budget} (residual tail mass {residual:.3e})")]
    TailCutoffExceeded { budget: usize, residual: f64 },
    #[error("rescaled metric undefined for a map without inner vertices")]
    ZeroInnerVertices,
    #[error("loop ensembles require a monochromatic boundary condition")]
    BoundaryConditionMismatch,
    #[error("loops are inconsistent with the map: {0}")]
    InconsistentLoops(String),
    #[error("{k} inner vertices exceeds the exhaustive limit {max}")]
    TooManyVertices { k: usize, max: usize },
    #[error("negative coordinate passed to projection")]
    NegativeInput,
    #[error("query point within {radius} of a corner")]
    QueryTooCloseToCorner { radius: f64 },
    #[error("operation requires an inner vertex")]
    BoundaryVertex,
    #[error("vertex does not lie in the box")]
    VertexOutsideBox,
    #[error("Laplacian factorization failed")]
    SingularLaplacian,
    #[error("regularization radius {r} below 2δ = {min}")]
    RegularizationTooFine { r: f64, min: f64 },
    #[error("total clock rate is zero")]
    ZeroTotalRate(Box<DynTrajectory>),
    #[error("{k} inner vertices gives too many states (limit {max})")]
    TooManyStates { k: usize, max: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical method did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
