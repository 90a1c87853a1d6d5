//! Backward monotone finite-difference solution of the dual equation
//! `dW/dt + H*(x, DW) = 0` and recovery of the primal value by conjugation.
//!
//! Two routes share one kernel. The V route marches `Ṽ(t, x, p_hat, q)` from
//! `max_i (p_hat_i - sum_j q_j g_ij(x))`, and the W route marches
//! `W̃(t, x, p, q_hat)` from `min_j (q_hat_j - sum_i p_i g_ij(x))`. Each
//! (dual node, belief node) pair is an independent scalar problem.

mod checks;
mod field;
mod recover;
mod scheme;

pub use checks::{
    certified_mask, check_subdpp, check_value_agreement, AgreementReport, SubDppReport, SubDppSample,
};
pub use field::{DualField, PdeGrids, Route, ValueField};
pub use recover::{recover_primal, Recovery};
pub use scheme::{
    cfl_bound, dual_terminal, dual_terminal_w, lf_sweep, solve_dual, solve_dual_v, solve_dual_w, viscosity,
};
