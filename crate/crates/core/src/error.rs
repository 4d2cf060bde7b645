use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least {min} nodes, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("fields live on different grids ({left} vs {right} nodes)")]
    GridMismatch { left: usize, right: usize },

    #[error("field length {len} does not match grid with {n_nodes} nodes")]
    LengthMismatch { len: usize, n_nodes: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial data violates kappa_x > |rho_x| at x = {x} (margin {margin:e}); amplitude too large")]
    ConstraintInfeasible { x: f64, margin: f64 },

    #[error("singular denominator {value:e} at node {node}")]
    SingularDenominator { node: usize, value: f64 },

    #[error("Picard iteration did not converge in {iters} sweeps (last gap {gap:e})")]
    PicardDiverged { iters: usize, gap: f64 },

    #[error("time step collapsed to {dt:e} at t = {time}")]
    StepCollapse { dt: f64, time: f64 },

    #[error("tri-exponential fit infeasible: min kappa_x = {min_kappa_x:e} at t = {time}")]
    InfeasibleFit { min_kappa_x: f64, time: f64 },

    #[error("Hölder order {0} is an integer")]
    IntegerOrder(f64),

    #[error("no parabolic cylinder fits in the domain")]
    EmptyDomain,

    #[error("zero denominator: field vanishes identically")]
    ZeroDenominator,

    #[error("I/O error: {0}")]
    Io(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
