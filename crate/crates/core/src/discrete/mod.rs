//! The partition game played concretely: random strategies with delay,
//! the strategy-versus-strategy control fixpoint, Monte Carlo estimation
//! and exact values of small instances.

pub mod exact;
pub mod play;
pub mod rng;
pub mod strategy;

pub use exact::{
    best_response_p1, best_response_p2, check_dual_reformulation, convexity_probe, enumerate_tables,
    exact_partition_value, one_stage_partition, one_stage_value, table_count, to_behavior, BestResponse,
    ConvexityProbe, DualReformulationReport, ExactValue, PureTable,
};
pub use play::{
    expected_payoff, path_distribution, payoff_mc, profile_payoff, simulate, terminal_state, Episode, McConfig,
    McEstimate, TypeAveraging,
};
pub use rng::{inverse_cdf, uniform, RandomSource};
pub use strategy::{resolve_controls, IntervalRule, RandomNadStrategy, Rule, StrategyProfile};
