use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight y^a is singular at y = 0 for a = {a} < 0; use half-node fluxes")]
    DegenerateWeight { a: f64 },

    #[error("argument x = {x} overflows the unscaled Bessel functions (limit {limit})")]
    BesselOverflow { x: f64, limit: f64 },

    #[error("Bessel evaluation failed to converge for nu = {nu}, x = {x}")]
    BesselNoConvergence { nu: f64, x: f64 },

    #[error("singular tridiagonal system at row {row}")]
    SingularSystem { row: usize },

    #[error("field does not match grid: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("radius {radius} exceeds the half box width {half_width}")]
    RadiusExceedsBox { radius: f64, half_width: f64 },

    #[error("boundary data value {value} at node {index} lies outside [{lo}, {hi}]")]
    InfeasibleBoundary {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("iteration cap {max_iter} reached with projected gradient {residual:e}")]
    IterationCap { max_iter: usize, residual: f64 },

    #[error("line search stalled at iteration {iteration} with projected gradient {residual:e}")]
    LineSearchStall { iteration: usize, residual: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("computed profile is not monotone (largest decrease {worst_drop:e})")]
    NonMonotone { worst_drop: f64 },

    #[error("field is constant; no preferred direction")]
    ConstantField,
}

pub type Result<T> = std::result::Result<T, Error>;
