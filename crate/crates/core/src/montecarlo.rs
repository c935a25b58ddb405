//! Seeded simulation of the joint completion time.
//!
//! Trial `i` draws from a ChaCha8 generator keyed by the run seed and set
//! to stream `i`, so every trial's randomness is fixed by `(seed, i)` alone.
//! Trials are reduced in fixed blocks of [`BLOCK_TRIALS`] whose partial
//! moments are merged in block order; the result is therefore bit-identical
//! whatever the thread count.

use crate::error::{Error, Result};
use crate::estimator::RunningMoments;
use crate::model::{PartitionedModel, ScaledProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

pub const BLOCK_TRIALS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    /// Clamp negative completion times to zero, matching the 0 lower limit
    /// of the analytic tail integrals.
    pub clamp_negative: bool,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        SimConfig {
            trials,
            seed,
            clamp_negative: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("simulation needs at least one trial".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub empirical_mean: f64,
    /// Unbiased sample variance; 0 when only one trial ran.
    pub empirical_variance: f64,
    pub std_error_mean: f64,
    pub trials: u64,
    /// Trials whose completion time came out negative and was clamped.
    pub clamped_count: u64,
    /// False when the variance is undefined (a single trial).
    pub variance_defined: bool,
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn draw_max<R: Rng + ?Sized>(scaled: &[ScaledProfile], rng: &mut R) -> f64 {
    scaled
        .iter()
        .map(|s| {
            if s.is_point_mass() {
                s.mu_scaled
            } else {
                let z: f64 = rng.sample(StandardNormal);
                s.mu_scaled + s.sigma_scaled * z
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One joint completion time: every part drawn from its scaled law, then the max.
///
/// Point-mass parts contribute their location without consuming randomness.
/// Clamping the max at zero is the same as clamping every part first.
pub fn sample_completion<R: Rng + ?Sized>(model: &PartitionedModel, rng: &mut R, clamp_negative: bool) -> f64 {
    let t = draw_max(&model.scaled(), rng);
    if clamp_negative {
        t.max(0.0)
    } else {
        t
    }
}

/// Empirical mean and variance of the joint completion time.
pub fn estimate_moments(model: &PartitionedModel, config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let scaled = model.scaled();
    let blocks = config.trials.div_ceil(BLOCK_TRIALS);
    let partials: Vec<(RunningMoments, u64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK_TRIALS;
            let hi = (lo + BLOCK_TRIALS).min(config.trials);
            let mut acc = RunningMoments::new();
            let mut clamped = 0;
            for trial in lo..hi {
                let mut rng = trial_rng(config.seed, trial);
                let mut t = draw_max(&scaled, &mut rng);
                if t < 0.0 && config.clamp_negative {
                    t = 0.0;
                    clamped += 1;
                }
                acc.push(t);
            }
            (acc, clamped)
        })
        .collect();

    let (acc, clamped_count) = partials
        .iter()
        .fold((RunningMoments::new(), 0), |(acc, c), (part, pc)| (acc.merge(part), c + pc));
    let variance = acc.variance();
    let empirical_variance = variance.unwrap_or(0.0);
    Ok(SimResult {
        empirical_mean: acc.mean(),
        empirical_variance,
        std_error_mean: (empirical_variance / config.trials as f64).sqrt(),
        trials: config.trials,
        clamped_count,
        variance_defined: variance.is_some(),
    })
}
