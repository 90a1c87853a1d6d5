//! Command-line front end: configuration loading, subcommand
//! orchestration and deterministic export.

pub mod config;
pub mod export;
pub mod expr;
pub mod run;
