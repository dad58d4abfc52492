use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: potential has d={expected}, point has d={got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite potential value {value} at grid point {index} (x = {x})")]
    NonFinitePotential { index: usize, x: f64, value: f64 },

    #[error("envelope integral diverges: {0}")]
    DivergentEnvelope(String),

    #[error("invalid catalog entry: {0}")]
    InvalidCatalog(String),

    #[error("ground state not strictly positive at grid point {index} (value {value:e}); grid too coarse or box too large")]
    NonPositiveGroundState { index: usize, value: f64 },

    #[error("heat kernel entry K[{row},{col}] = {value:e} is negative beyond clamp tolerance")]
    NegativeKernel { row: usize, col: usize, value: f64 },

    #[error("transition mass {mass} from grid point {index} deviates from 1")]
    TransitionMass { index: usize, mass: f64 },

    #[error("zero conditional mass for bridge from {from} to {to} over {steps} steps; use larger dt or more steps")]
    ZeroBridgeMass { from: usize, to: usize, steps: usize },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("oracle size {size} exceeds cap {cap}")]
    OracleTooLarge { size: u128, cap: u128 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("horizon too short: tail bound {tail:e} exceeds 10% of estimate {estimate:e}; try horizon >= {suggested}")]
    HorizonTooShort { tail: f64, estimate: f64, suggested: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
