use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a map was rejected from a chart domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartCause {
    /// The graph of the map leaves the tubular neighbourhood.
    OutsideTube,
    /// The vertical factor could not be certified and inverted.
    Inversion,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate {value} on axis {axis}")]
    InvalidCoordinate { axis: usize, value: f64 },

    #[error("invalid torus shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid grid map: {0}")]
    InvalidMap(String),

    #[error("not a diffeomorphism: det(Df) = {det:e} at node {node}")]
    NotADiffeomorphism { node: usize, det: f64 },

    #[error("Newton inversion failed at node {node} after {iterations} iterations (residual {residual:e})")]
    InversionFailed { node: usize, iterations: usize, residual: f64 },

    #[error("outside tube: base axis {axis} offset {offset} exceeds radius {delta} (node {node:?})")]
    OutsideTube { axis: usize, offset: f64, delta: f64, node: Option<usize> },

    #[error("1-D projection refinement did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("not in chart domain ({cause:?}): {source}")]
    NotInChartDomain {
        cause: ChartCause,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid chart factor: {0}")]
    InvalidFactor(String),

    #[error("p2∘α is not a certified diffeomorphism: {0}")]
    NotInV1(Box<Error>),

    #[error("π∘σ is not a certified diffeomorphism of the base: {0}")]
    NotInW(Box<Error>),

    #[error("rank-deficient differential: smallest singular value {margin:e} at t = {t}")]
    RankDeficient { t: f64, margin: f64 },

    #[error("transport drift {drift:e} exceeds tolerance at t = {t}")]
    DriftExceeded { t: f64, drift: f64 },

    #[error("parameter bisection exceeded depth {depth} near t = {t}")]
    MaxDepthExceeded { depth: usize, t: f64 },

    #[error("invalid fibration path: {0}")]
    InvalidPath(String),

    #[error("grid-map format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotADiffeomorphism { .. }
                | Error::InversionFailed { .. }
                | Error::NonConvergence { .. }
                | Error::NotInChartDomain { .. }
                | Error::NotInV1(_)
                | Error::NotInW(_)
                | Error::RankDeficient { .. }
                | Error::DriftExceeded { .. }
                | Error::MaxDepthExceeded { .. }
                | Error::OutsideTube { .. }
        )
    }
}
