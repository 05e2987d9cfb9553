use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point fed to the map lies outside every branch domain.
    #[error("undefined point: {0:?} lies outside every branch domain")]
    UndefinedPoint(Vec<f64>),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// No cell is reachable from a cycle of the overlap graph, so no
    /// conditionally invariant behaviour is representable at this resolution.
    #[error("empty reduced domain: no cell is reachable from a cycle of the overlap graph")]
    EmptyReducedDomain,

    /// The dual iteration left the positive cone. Running the solver on an
    /// unreduced or otherwise infeasible problem ends here.
    #[error("dual divergence at iteration {iteration}: {detail}")]
    DualDivergence { iteration: usize, detail: String },

    #[error("no convergence after {iterations} iterations (last delta {last_delta:e})")]
    NoConvergence { iterations: usize, last_delta: f64 },

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
