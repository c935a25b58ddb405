use super::dataset::{split_dataset, Dataset};
use super::solver::{combine, solve_least_squares, solve_least_squares_with, Solution, SolverSettings};
use crate::error::{Error, Result};
use crate::schedule::{trial_schedule, validate_grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

/// Per-iteration delay a channel adds while processing the FULL dataset.
/// A shard holding a fraction `r` of the rows sleeps `r · max(0, N(mean, sigma²))`
/// milliseconds per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayProfile {
    pub mean_ms: f64,
    pub sigma_ms: f64,
}

impl DelayProfile {
    pub fn new(mean_ms: f64, sigma_ms: f64) -> Result<Self> {
        if !(mean_ms.is_finite() && mean_ms >= 0.0 && sigma_ms.is_finite() && sigma_ms >= 0.0) {
            return Err(Error::Domain(format!(
                "delay profile needs finite nonnegative mean and sigma, got {mean_ms}:{sigma_ms}"
            )));
        }
        Ok(DelayProfile { mean_ms, sigma_ms })
    }

    fn draw<R: Rng>(&self, rng: &mut R, share: f64) -> Duration {
        let z: f64 = rng.sample(StandardNormal);
        let ms = (self.mean_ms + self.sigma_ms * z).max(0.0) * share;
        Duration::from_secs_f64(ms / 1e3)
    }
}

/// Parses `mean_ms:sigma_ms`.
impl FromStr for DelayProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (m, sd) = s
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("expected mean_ms:sigma_ms, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad delay value {v:?}")))
        };
        DelayProfile::new(parse(m)?, parse(sd)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptExperimentConfig {
    pub f_grid: Vec<f64>,
    pub trials_per_f: usize,
    /// Channel i then channel j.
    pub delays: [DelayProfile; 2],
    pub seed: u64,
    pub randomize_order: bool,
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptTrialRecord {
    pub trial_id: u64,
    pub fraction: f64,
    /// Wall time from launching both shard solves to the combined solution.
    pub completion_ns: u64,
    /// Relative ℓ2 distance of the combined solution from the full-data solve.
    pub quality_gap: f64,
    pub iterations: [usize; 2],
    /// `None` on success, otherwise why the trial is excluded.
    pub failure: Option<String>,
}

impl OptTrialRecord {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptExperiment {
    pub records: Vec<OptTrialRecord>,
    pub reference: Solution,
}

fn relative_gap(theta: &[f64], reference: &[f64]) -> f64 {
    let diff: f64 = theta.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

fn channel_rng(seed: u64, trial: u64, channel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial * 2 + channel);
    rng
}

fn timed_solve(data: &Dataset, share: f64, delay: DelayProfile, mut rng: ChaCha8Rng, settings: &SolverSettings) -> Result<Solution> {
    solve_least_squares_with(data, settings, |_| {
        let pause = delay.draw(&mut rng, share);
        if !pause.is_zero() {
            thread::sleep(pause);
        }
    })
}

fn run_trial(data: &Dataset, fraction: f64, trial_id: u64, config: &OptExperimentConfig, reference: &[f64]) -> OptTrialRecord {
    let n = data.rows() as f64;
    let [delay_i, delay_j] = config.delays;
    let rng_i = channel_rng(config.seed, trial_id, 0);
    let rng_j = channel_rng(config.seed, trial_id, 1);
    let mut record = OptTrialRecord {
        trial_id,
        fraction,
        completion_ns: 0,
        quality_gap: f64::NAN,
        iterations: [0, 0],
        failure: None,
    };

    let outcome = if fraction == 0.0 || fraction == 1.0 {
        // one channel carries the whole workflow; the other finishes at once
        let (delay, rng) = if fraction == 1.0 { (delay_i, rng_i) } else { (delay_j, rng_j) };
        let start = Instant::now();
        let solved = timed_solve(data, 1.0, delay, rng, &config.solver);
        solved.and_then(|s| {
            let zero = vec![0.0; s.theta.len()];
            let (ti, tj) = if fraction == 1.0 { (&s.theta, &zero) } else { (&zero, &s.theta) };
            let c = combine(ti, tj, fraction)?;
            let elapsed = start.elapsed();
            let its = if fraction == 1.0 { [s.iterations, 0] } else { [0, s.iterations] };
            Ok((c, elapsed, its))
        })
    } else {
        split_dataset(data, fraction, config.seed ^ trial_id.rotate_left(32)).and_then(|(di, dj)| {
            let share_i = di.rows() as f64 / n;
            let share_j = dj.rows() as f64 / n;
            let start = Instant::now();
            let (si, sj) = thread::scope(|scope| {
                let hi = scope.spawn(|| timed_solve(&di, share_i, delay_i, rng_i, &config.solver));
                let hj = scope.spawn(|| timed_solve(&dj, share_j, delay_j, rng_j, &config.solver));
                (
                    hi.join().expect("shard solver thread panicked"),
                    hj.join().expect("shard solver thread panicked"),
                )
            });
            let (si, sj) = (si?, sj?);
            let c = combine(&si.theta, &sj.theta, fraction)?;
            Ok((c, start.elapsed(), [si.iterations, sj.iterations]))
        })
    };

    match outcome {
        Ok((combined, elapsed, iterations)) => {
            record.completion_ns = elapsed.as_nanos() as u64;
            record.quality_gap = relative_gap(&combined.theta, reference);
            record.iterations = iterations;
        }
        Err(e) => record.failure = Some(e.to_string()),
    }
    record
}

/// Runs `trials_per_f` split-solve-combine trials per grid value, one
/// trial at a time, the two shard solves of a trial concurrently.
pub fn run_opt_experiment(data: &Dataset, config: &OptExperimentConfig) -> Result<OptExperiment> {
    validate_grid(&config.f_grid)?;
    let d = data.dim();
    for &f in &config.f_grid {
        if f > 0.0 && f < 1.0 {
            let ni = super::dataset::first_shard_rows(data.rows(), f);
            if ni < d || data.rows() - ni < d {
                return Err(Error::Domain(format!("fraction {f} leaves a shard with fewer than {d} rows")));
            }
        }
    }
    let reference = solve_least_squares(data, &config.solver)?;
    let schedule = trial_schedule(&config.f_grid, config.trials_per_f, config.seed, config.randomize_order)?;
    let records = schedule
        .iter()
        .enumerate()
        .map(|(id, &f)| run_trial(data, f, id as u64, config, &reference.theta))
        .collect();
    Ok(OptExperiment { records, reference })
}
