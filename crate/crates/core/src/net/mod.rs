//! Dual-path loopback transfer harness.
//!
//! A payload is split by `f`: the first `round(f · size)` bytes go over
//! channel A, the rest over channel B. Each channel is a TCP connection,
//! shaped either by the sender (direct path) or by a relay sitting in the
//! middle. The receiver requests both halves at one instant and records when
//! the last terminal chunk lands.

mod harness;
mod receiver;
mod relay;
mod sender;
mod shaper;
pub mod wire;

pub use harness::{run_experiment, run_schedule, run_trial, summarize, FractionFit, LoopbackHarness, NetConfig, NetExperiment, MAX_FAILURE_RATE};
pub use receiver::{Receiver, ReceiverConfig, TrialRecord, TrialStatus, DEFAULT_TIMEOUT};
pub use relay::{connect_retry, serve_relay};
pub use sender::{Sender, SenderConfig};
pub use shaper::{ChannelConfig, Shaper};
pub use wire::split_payload;
