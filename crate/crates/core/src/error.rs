use thiserror::Error;

/// Errors raised by the solver suite.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game specification: {0}")]
    InvalidSpec(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid mixed strategy: {0}")]
    InvalidMix(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration budget exceeded: {steps} steps requested, cap is {cap}")]
    IntegrationBudget { steps: usize, cap: usize },

    #[error("ill-conditioned game: pivot {pivot:.3e} on submatrix {submatrix:?}")]
    IllConditioned { pivot: f64, submatrix: Vec<Vec<f64>> },

    #[error("matrix game certificate gap {gap:.3e} exceeds tolerance {tol:.3e}")]
    Certificate { gap: f64, tol: f64 },

    #[error("CFL violation at step {step}: dt = {dt:.6e} exceeds bound {bound:.6e}")]
    Cfl { step: usize, dt: f64, bound: f64 },

    #[error("non-finite value in sweep at knot {knot}, state node {node}, dual column {column}")]
    NonFinite { knot: usize, node: usize, column: usize },

    #[error("dual box underscoped: estimated slope spread {spread:.6e} exceeds 2R = {limit:.6e}")]
    DualBoxUnderscoped { spread: f64, limit: f64 },

    #[error("instance too large for brute force: {count} pure profiles, cap is {cap}")]
    TooLarge { count: usize, cap: usize },

    #[error("delay violation in strategy for interval {interval}: rule reads {read} opponent intervals, only {allowed} permitted")]
    DelayViolation { interval: usize, read: usize, allowed: usize },

    #[error("strategy/partition mismatch: {0}")]
    StrategyMismatch(String),

    #[error("dimension budget exceeded: blown-up state dimension {dim} (d = {d}, I = {i}, J = {j}) exceeds cap {cap}")]
    DimensionBudget { dim: usize, d: usize, i: usize, j: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
