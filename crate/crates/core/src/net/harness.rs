use super::receiver::{Receiver, ReceiverConfig, TrialRecord, DEFAULT_TIMEOUT};
use super::relay::serve_relay;
use super::sender::{Sender, SenderConfig};
use super::shaper::ChannelConfig;
use super::wire::DEFAULT_CHUNK_SIZE;
use crate::error::{Error, Result};
use crate::estimator::{fit_profile, FitReport};
use crate::schedule::trial_schedule;
use serde::Serialize;
use std::net::{SocketAddr, TcpListener};
use std::thread::{self, JoinHandle};
use std::time::Duration;

/// Share of failed trials above which an experiment is rejected.
pub const MAX_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetConfig {
    /// Channel A then channel B.
    pub channels: [ChannelConfig; 2],
    pub payload_size: u64,
    pub chunk_size: usize,
    /// Drives the payload bytes, the shaping delays and the trial order.
    pub seed: u64,
    pub timeout: Duration,
}

impl NetConfig {
    pub fn new(channels: [ChannelConfig; 2], payload_size: u64, seed: u64) -> Self {
        NetConfig { channels, payload_size, chunk_size: DEFAULT_CHUNK_SIZE, seed, timeout: DEFAULT_TIMEOUT }
    }

    pub fn sender_config(&self) -> SenderConfig {
        SenderConfig { channels: self.channels, chunk_size: self.chunk_size, shaping_seed: self.seed }
    }

    pub fn receiver_config(&self) -> ReceiverConfig {
        ReceiverConfig { payload_size: self.payload_size, payload_seed: self.seed, timeout: self.timeout }
    }
}

/// Receiver, sender and relays on 127.0.0.1 ephemeral ports, all in this
/// process on their own threads.
pub struct LoopbackHarness {
    receiver: Receiver,
    workers: Vec<JoinHandle<Result<()>>>,
}

impl LoopbackHarness {
    pub fn start(config: &NetConfig) -> Result<Self> {
        let sender_config = config.sender_config();
        sender_config.validate()?;
        let receiver_config = config.receiver_config();
        receiver_config.validate()?;

        let loopback = SocketAddr::from(([127, 0, 0, 1], 0));
        let inbound = [TcpListener::bind(loopback)?, TcpListener::bind(loopback)?];
        let mut workers = Vec::new();
        let mut targets = [inbound[0].local_addr()?, inbound[1].local_addr()?];
        for (c, channel) in config.channels.iter().enumerate() {
            if channel.via_relay {
                let relay_in = TcpListener::bind(loopback)?;
                let forward = targets[c];
                targets[c] = relay_in.local_addr()?;
                let (channel, seed) = (*channel, config.seed);
                workers.push(thread::spawn(move || serve_relay(&relay_in, forward, channel, seed)));
            }
        }
        workers.push(thread::spawn(move || Sender::connect(targets, sender_config)?.serve()));
        let receiver = Receiver::accept([&inbound[0], &inbound[1]], receiver_config)?;
        Ok(LoopbackHarness { receiver, workers })
    }

    pub fn run_trial(&mut self, fraction: f64, trial_id: u32) -> Result<TrialRecord> {
        self.receiver.run_trial(fraction, trial_id)
    }

    /// Hangs up and waits for the sender and relays to exit.
    pub fn finish(self) -> Result<()> {
        self.receiver.close();
        let mut result = Ok(());
        for w in self.workers {
            let r = w.join().expect("harness worker panicked");
            if result.is_ok() {
                result = r;
            }
        }
        result
    }
}

/// One trial on a fresh loopback harness.
pub fn run_trial(channels: [ChannelConfig; 2], payload_size: u64, fraction: f64, trial_id: u32, seed: u64) -> Result<TrialRecord> {
    let config = NetConfig::new(channels, payload_size, seed);
    let mut h = LoopbackHarness::start(&config)?;
    let record = h.run_trial(fraction, trial_id);
    let closed = h.finish();
    let record = record?;
    // a failed trial may leave the peers with a broken pipe; that is already
    // captured in the record's status
    if record.ok() {
        closed?;
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionFit {
    pub fraction: f64,
    /// Fit of the successful completions at this fraction, in seconds.
    /// `None` with fewer than two successes.
    pub fit: Option<FitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetExperiment {
    /// In execution order.
    pub records: Vec<TrialRecord>,
    /// One entry per grid value, in grid order.
    pub fits: Vec<FractionFit>,
    pub failures: usize,
}

impl NetExperiment {
    /// Successful completions at `fraction`, in seconds, in execution order.
    pub fn completions_secs(&self, fraction: f64) -> Vec<f64> {
        completions_at(&self.records, fraction)
    }
}

fn completions_at(records: &[TrialRecord], fraction: f64) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.ok() && r.fraction == fraction)
        .map(TrialRecord::completion_secs)
        .collect()
}

/// Runs `schedule` in order on an established receiver; trial ids are
/// schedule positions.
pub fn run_schedule(receiver: &mut Receiver, schedule: &[f64]) -> Result<Vec<TrialRecord>> {
    if schedule.len() > u32::MAX as usize {
        return Err(Error::Resource(format!("{} trials exceed the wire trial id range", schedule.len())));
    }
    schedule
        .iter()
        .enumerate()
        .map(|(id, &f)| receiver.run_trial(f, id as u32))
        .collect()
}

/// Applies the failure-rate rule and fits each grid value's successes.
pub fn summarize(records: Vec<TrialRecord>, f_grid: &[f64]) -> Result<NetExperiment> {
    let failures = records.iter().filter(|r| !r.ok()).count();
    if failures as f64 > MAX_FAILURE_RATE * records.len() as f64 {
        return Err(Error::FailureRate { failed: failures, total: records.len() });
    }
    let fits = f_grid
        .iter()
        .map(|&f| FractionFit { fraction: f, fit: fit_profile(completions_at(&records, f)).ok() })
        .collect();
    Ok(NetExperiment { records, fits, failures })
}

/// Runs `trials_per_f` trials per grid value over one persistent harness,
/// sequentially.
pub fn run_experiment(
    config: &NetConfig,
    f_grid: &[f64],
    trials_per_f: usize,
    randomize_order: bool,
) -> Result<NetExperiment> {
    let schedule = trial_schedule(f_grid, trials_per_f, config.seed, randomize_order)?;
    let mut harness = LoopbackHarness::start(config)?;
    let records = run_schedule(&mut harness.receiver, &schedule);
    let closed = harness.finish();
    let experiment = summarize(records?, f_grid)?;
    if experiment.failures == 0 {
        closed?;
    }
    Ok(experiment)
}
