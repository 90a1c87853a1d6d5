//! Shared domain types: game specification, grids, mixed strategies and the
//! controlled dynamics.

pub mod grid;
pub mod mixed;
pub mod ode;
pub mod spec;

pub use grid::{binomial, SimplexGrid, StateGrid, TimePartition};
pub use mixed::MixedStrategy;
pub use ode::{integrate, verify_estimates, ControlPath, EstimateReport, EstimateSample};
pub use spec::{payoff, ControlSet, GameSpec, Payoff, VectorField};
