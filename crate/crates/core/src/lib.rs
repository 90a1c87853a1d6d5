//! Numerical solvers for two-player zero-sum differential games with
//! asymmetric information on the payoff and no Isaacs condition.
//!
//! Player 1 (controls `U`, types `i ~ p`) minimizes and player 2 (controls
//! `V`, types `j ~ q`) maximizes the terminal payoff `g_ij(X_T)`. The value
//! is computed through the Fenchel conjugates in the beliefs, which solve a
//! first-order equation driven by the mixed-strategy Hamiltonian. Numerical
//! code is generic over the scalar type; the aliases below fix `f64`.

pub mod blowup;
pub mod discrete;
pub mod error;
pub mod fenchel;
pub mod hamiltonian;
pub mod hji;
pub mod matrix_game;
pub mod model;
pub mod numerics;
pub mod scalar;

pub use error::{Error, Result};

pub type GameSpec64 = model::GameSpec<f64>;
pub type StateGrid64 = model::StateGrid<f64>;
pub type TimePartition64 = model::TimePartition<f64>;
pub type MixedStrategy64 = model::MixedStrategy<f64>;
pub type MatrixGame64 = matrix_game::MatrixGame<f64>;
pub type NumericsConfig64 = numerics::NumericsConfig<f64>;
pub type SimplexFunction64 = fenchel::SimplexFunction<f64>;
pub type DualBox64 = fenchel::DualBox<f64>;
pub type PdeGrids64 = hji::PdeGrids<f64>;
pub type DualField64 = hji::DualField<f64>;
pub type ValueField64 = hji::ValueField<f64>;
pub type ScenarioSpec64 = blowup::ScenarioSpec<f64>;
