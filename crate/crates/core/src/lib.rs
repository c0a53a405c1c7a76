//! Expected hitting times for betting strategies in favorable repeated games.
//!
//! The crate evaluates fixed policies exactly over the rationals, computes
//! certified step-function bounds on the optimal expected number of rounds to
//! reach a target bankroll of 1, and cross-checks both by simulation.

pub mod bounds;
pub mod cli;
pub mod exact_eval;
pub mod game;
pub mod montecarlo;
pub mod numerics;
pub mod strategies;
