use super::wire::ChannelId;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::thread;
use std::time::{Duration, Instant};

/// Emulated path. Each data chunk is held for `max(0, N(base, jitter²))`
/// milliseconds plus its length over `rate_limit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub base_delay_ms: f64,
    pub jitter_sigma_ms: f64,
    /// Bytes per second.
    pub rate_limit: f64,
    pub via_relay: bool,
}

impl ChannelConfig {
    pub fn new(base_delay_ms: f64, jitter_sigma_ms: f64, rate_limit: f64, via_relay: bool) -> Result<Self> {
        let c = ChannelConfig { base_delay_ms, jitter_sigma_ms, rate_limit, via_relay };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_delay_ms.is_finite() && self.base_delay_ms >= 0.0) {
            return Err(Error::Domain(format!("base delay must be finite and >= 0, got {}", self.base_delay_ms)));
        }
        if !(self.jitter_sigma_ms.is_finite() && self.jitter_sigma_ms >= 0.0) {
            return Err(Error::Domain(format!("jitter must be finite and >= 0, got {}", self.jitter_sigma_ms)));
        }
        if !(self.rate_limit.is_finite() && self.rate_limit > 0.0) {
            return Err(Error::Domain(format!("rate limit must be positive, got {}", self.rate_limit)));
        }
        Ok(())
    }

    /// Lower bound on moving `bytes` through this channel: the rate limit alone.
    pub fn min_transfer_ns(&self, bytes: u64) -> u64 {
        (bytes as f64 / self.rate_limit * 1e9).floor() as u64
    }
}

/// Per-trial delay source. Both the sender (direct paths) and the relay use
/// the same seeding, so a path's delays do not depend on where it is shaped.
pub struct Shaper {
    config: ChannelConfig,
    rng: ChaCha8Rng,
    release: Option<Instant>,
}

impl Shaper {
    pub fn for_trial(config: ChannelConfig, seed: u64, trial_id: u32, channel: ChannelId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial_id as u64 * 2 + channel as u64);
        Shaper { config, rng, release: None }
    }

    pub fn delay_for(&mut self, len: usize) -> Duration {
        let z: f64 = self.rng.sample(StandardNormal);
        let ms = (self.config.base_delay_ms + self.config.jitter_sigma_ms * z).max(0.0);
        Duration::from_secs_f64(ms / 1e3 + len as f64 / self.config.rate_limit)
    }

    /// Holds a chunk that became ready at `ready` until its release time.
    /// Chunks queue behind each other, so the path behaves like a single
    /// server whose service time is the sampled delay.
    pub fn hold(&mut self, ready: Instant, len: usize) {
        let start = match self.release {
            Some(prev) if prev > ready => prev,
            _ => ready,
        };
        let release = start + self.delay_for(len);
        self.release = Some(release);
        let now = Instant::now();
        if release > now {
            thread::sleep(release - now);
        }
    }
}
