//! Trial schedules shared by the experiment harnesses.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `{0.0, 0.1, ..., 1.0}`, the coarse grid the harnesses default to.
pub fn coarse_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("fraction grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Domain(format!("grid value {bad} outside [0, 1]")));
    }
    Ok(())
}

/// One entry per trial, `trials_per_f` of each grid value. With
/// `randomize` the order is a seeded shuffle, otherwise grid order.
pub fn trial_schedule(grid: &[f64], trials_per_f: usize, seed: u64, randomize: bool) -> Result<Vec<f64>> {
    validate_grid(grid)?;
    if trials_per_f == 0 {
        return Err(Error::Domain("need at least one trial per fraction".into()));
    }
    let mut schedule: Vec<f64> = grid
        .iter()
        .flat_map(|&f| std::iter::repeat_n(f, trials_per_f))
        .collect();
    if randomize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        schedule.shuffle(&mut rng);
    }
    Ok(schedule)
}
