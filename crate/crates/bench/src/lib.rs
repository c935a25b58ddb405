//! Shared fixtures for the criterion benches.

use splitflow::{ChannelProfile, PartitionedModel};

/// A slow steady channel and a fast noisy one.
pub fn steady_and_noisy() -> (ChannelProfile, ChannelProfile) {
    (
        ChannelProfile::new(30.0, 2.0).expect("valid profile"),
        ChannelProfile::new(20.0, 6.0).expect("valid profile"),
    )
}

pub fn split_model(f: f64) -> PartitionedModel {
    let (a, b) = steady_and_noisy();
    PartitionedModel::split(a, b, f).expect("valid split")
}
