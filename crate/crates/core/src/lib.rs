//! Planning and validation toolkit for splitting a workflow across parallel
//! channels whose completion times fluctuate.
//!
//! The workflow is done when its slowest part is done. Given per-channel
//! completion-time statistics, [`model`] gives the mean and variance of that
//! joint completion time as a function of the split, [`frontier`] sweeps the
//! split and extracts the mean–variance efficient set, and [`montecarlo`]
//! checks the analytics by simulation. [`estimator`] fits channel profiles
//! from measured samples, and the [`net`] and [`opt`] harnesses run the
//! split for real: a dual-path loopback transfer and a split-and-combine
//! least-squares solve.

pub mod error;
pub mod estimator;
pub mod frontier;
pub mod model;
pub mod montecarlo;
pub mod net;
pub mod opt;
pub mod normal;
pub mod quadrature;
pub mod schedule;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{fit_profile, rescale_to_full, FitReport, RunningMoments};
pub use frontier::{pareto_frontier, select_fraction, sweep_curve, sweep_simplex, MomentPoint, Objective};
pub use model::{
    clark_moments, completion_moments, completion_variance, expected_completion, joint_cdf, joint_pdf,
    scale_profile, ChannelProfile, MomentPair, MomentReport, PartitionedModel, ScaledProfile,
    VarianceEstimate,
};
pub use montecarlo::{estimate_moments, sample_completion, SimConfig, SimResult};
pub use net::{run_experiment, run_trial, split_payload, ChannelConfig, NetConfig, NetExperiment, TrialRecord, TrialStatus};
pub use quadrature::QuadSettings;
