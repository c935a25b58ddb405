//! Channel profiles fitted from measured completion times.

use crate::error::{Error, Result};
use crate::model::ChannelProfile;
use serde::Serialize;

/// Normality is accepted when |skewness| is below this.
pub const SKEWNESS_LIMIT: f64 = 0.5;
/// Normality is accepted when |excess kurtosis| is below this.
pub const EXCESS_KURTOSIS_LIMIT: f64 = 1.0;

/// Single-pass accumulator of the first four central moments.
///
/// Partial accumulators built on disjoint chunks combine with [`merge`],
/// which is how parallel ingestion reduces.
///
/// [`merge`]: RunningMoments::merge
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &RunningMoments) -> RunningMoments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3 + other.m3 + d2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        RunningMoments {
            n: self.n + other.n,
            mean,
            m2,
            m3,
            m4,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased (n − 1) variance; `None` below two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2 / (self.n - 1) as f64)
    }

    /// Moment-based skewness `g1`; 0 when there is no spread.
    pub fn skewness(&self) -> f64 {
        if self.m2 <= 0.0 {
            return 0.0;
        }
        (self.n as f64).sqrt() * self.m3 / self.m2.powf(1.5)
    }

    /// Moment-based excess kurtosis `g2`; 0 when there is no spread.
    pub fn excess_kurtosis(&self) -> f64 {
        if self.m2 <= 0.0 {
            return 0.0;
        }
        self.n as f64 * self.m4 / (self.m2 * self.m2) - 3.0
    }
}

impl Extend<f64> for RunningMoments {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl FromIterator<f64> for RunningMoments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = RunningMoments::new();
        acc.extend(iter);
        acc
    }
}

/// Summary of a sample of completion times. Serialises with the field
/// names used by the command-line `fit` output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    #[serde(rename = "mu")]
    pub mean: f64,
    #[serde(rename = "sigma")]
    pub std_dev: f64,
    #[serde(rename = "n")]
    pub sample_count: u64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    #[serde(rename = "normal_ok")]
    pub normality_flag: bool,
}

impl FitReport {
    pub fn from_moments(acc: &RunningMoments) -> Result<Self> {
        let variance = acc
            .variance()
            .ok_or_else(|| Error::Domain(format!("need at least 2 samples, got {}", acc.count())))?;
        let std_dev = variance.sqrt();
        let skewness = acc.skewness();
        let excess_kurtosis = acc.excess_kurtosis();
        let normality_flag =
            std_dev > 0.0 && skewness.abs() < SKEWNESS_LIMIT && excess_kurtosis.abs() < EXCESS_KURTOSIS_LIMIT;
        Ok(FitReport {
            mean: acc.mean(),
            std_dev,
            sample_count: acc.count(),
            skewness,
            excess_kurtosis,
            normality_flag,
        })
    }

    /// The fitted law as a profile (zero spread gives the deterministic limit).
    pub fn profile(&self) -> Result<ChannelProfile> {
        if self.std_dev == 0.0 {
            ChannelProfile::deterministic(self.mean)
        } else {
            ChannelProfile::new(self.mean, self.std_dev)
        }
    }
}

/// Fits mean, unbiased standard deviation and shape diagnostics in one pass.
pub fn fit_profile<I>(samples: I) -> Result<FitReport>
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = RunningMoments::new();
    for (i, x) in samples.into_iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::Data(format!("sample {} is not finite", i + 1)));
        }
        if x < 0.0 {
            return Err(Error::Data(format!("sample {} is negative ({x})", i + 1)));
        }
        acc.push(x);
    }
    FitReport::from_moments(&acc)
}

/// Full-workflow profile from a fit taken at workload fraction `fraction`.
pub fn rescale_to_full(report: &FitReport, fraction: f64) -> Result<ChannelProfile> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Domain(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let mu = report.mean / fraction;
    let sigma = report.std_dev / fraction;
    if sigma == 0.0 {
        ChannelProfile::deterministic(mu)
    } else {
        ChannelProfile::new(mu, sigma)
    }
}

/// Pearson correlation; `None` for fewer than two pairs or zero spread.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        let r = fit_profile([10.0, 20.0]).unwrap();
        assert_eq!(r.mean, 15.0);
        assert!((r.std_dev * r.std_dev - 50.0).abs() < 1e-12);
        assert_eq!(r.sample_count, 2);
    }

    #[test]
    fn constant_samples_are_degenerate() {
        let r = fit_profile([7.0; 4]).unwrap();
        assert_eq!((r.mean, r.std_dev), (7.0, 0.0));
        assert!(!r.normality_flag);
        assert_eq!(r.profile().unwrap().sigma(), 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(fit_profile([1.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_profile(Vec::<f64>::new()), Err(Error::Domain(_))));
        assert!(matches!(fit_profile([1.0, -2.0]), Err(Error::Data(_))));
        assert!(matches!(fit_profile([1.0, f64::NAN]), Err(Error::Data(_))));
        assert!(matches!(fit_profile([f64::INFINITY, 1.0]), Err(Error::Data(_))));
    }

    #[test]
    fn rescale_examples() {
        let r = fit_profile([14.0, 16.0]).unwrap();
        // mean 15, std sqrt(2); build the (15, 1) fit by hand
        let fit = FitReport { std_dev: 1.0, ..r };
        let p = rescale_to_full(&fit, 0.5).unwrap();
        assert_eq!((p.mu(), p.sigma()), (30.0, 2.0));
        let p = rescale_to_full(&r, 1.0).unwrap();
        assert_eq!((p.mu(), p.sigma()), (r.mean, r.std_dev));
        let small = FitReport { mean: 2.0, std_dev: 0.6, ..r };
        let p = rescale_to_full(&small, 0.1).unwrap();
        assert!((p.mu() - 20.0).abs() < 1e-12 && (p.sigma() - 6.0).abs() < 1e-12);
        assert!(matches!(rescale_to_full(&r, 0.0), Err(Error::Domain(_))));
        assert!(matches!(rescale_to_full(&r, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn skewed_sample_fails_normality() {
        // exponential-like: many small, few large
        let xs: Vec<f64> = (1..=1000).map(|i| -((i as f64) / 1001.0).ln()).collect();
        let r = fit_profile(xs).unwrap();
        assert!(r.skewness > 1.0);
        assert!(!r.normality_flag);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 * 0.37 + 3.0).collect();
        let whole: RunningMoments = xs.iter().copied().collect();
        let left: RunningMoments = xs[..313].iter().copied().collect();
        let right: RunningMoments = xs[313..].iter().copied().collect();
        let merged = left.merge(&right);
        assert_eq!(merged.count(), whole.count());
        assert!((merged.mean() - whole.mean()).abs() < 1e-12);
        assert!((merged.variance().unwrap() / whole.variance().unwrap() - 1.0).abs() < 1e-12);
        assert!((merged.skewness() - whole.skewness()).abs() < 1e-10);
        assert!((merged.excess_kurtosis() - whole.excess_kurtosis()).abs() < 1e-10);
        assert_eq!(RunningMoments::new().merge(&whole), whole);
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap() - 0.997_948_715_788_673).abs() < 1e-6);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
    }
}
