use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Design matrix and targets of a least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    targets: DVector<f64>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        let (n, d) = features.shape();
        if d == 0 || n < d {
            return Err(Error::Domain(format!("need n >= d >= 1, got n = {n}, d = {d}")));
        }
        if targets.len() != n {
            return Err(Error::Domain(format!("{n} rows but {} targets", targets.len())));
        }
        if features.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("dataset contains non-finite entries".into()));
        }
        Ok(Dataset { features, targets })
    }

    /// Gaussian features, `y = X θ* + noise`. Returns the data and `θ*`.
    pub fn synthetic(n: usize, d: usize, noise: f64, seed: u64) -> Result<(Dataset, Vec<f64>)> {
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(Error::Domain(format!("noise must be nonnegative, got {noise}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..d)
            .map(|_| {
                let mag: f64 = rng.random_range(0.5..2.0);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let features = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let clean = &features * DVector::from_column_slice(&theta);
        let targets = clean.map(|v| v + noise * rng.sample::<f64, _>(StandardNormal));
        Ok((Dataset::new(features, targets)?, theta))
    }

    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            targets: self.targets.select_rows(rows),
        }
    }
}

/// Rows in the first shard: `f n` rounded half up.
pub(crate) fn first_shard_rows(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Shuffles rows with `seed`, then gives the first `round(f n)` to shard i
/// and the rest to shard j.
pub fn split_dataset(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let n = data.rows();
    let d = data.dim();
    let ni = first_shard_rows(n, fraction);
    if ni < d || n - ni < d {
        return Err(Error::Domain(format!(
            "shards of {ni} and {} rows cannot determine {d} coefficients",
            n - ni
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((data.select(&order[..ni]), data.select(&order[ni..])))
}
