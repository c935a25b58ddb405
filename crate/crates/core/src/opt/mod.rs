//! Split-and-combine least squares under emulated contention.
//!
//! The dataset is split by `f`, each shard is solved to optimality on its
//! own thread, and the two solutions are combined as `f θ_i + (1 − f) θ_j`.
//! Per-iteration sleeps drawn from each channel's delay profile stand in for
//! background load on the machines.

mod dataset;
mod experiment;
mod solver;

pub use dataset::{split_dataset, Dataset};
pub use experiment::{run_opt_experiment, DelayProfile, OptExperiment, OptExperimentConfig, OptTrialRecord};
pub use solver::{combine, solve_least_squares, solve_least_squares_with, CombinedSolution, Solution, SolverSettings};
