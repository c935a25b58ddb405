//! Completion-time model for a workflow split across parallel channels.
//!
//! Each channel completes the full workflow in a Normally distributed time.
//! Giving it a fraction `f` of the work scales both mean and spread by `f`,
//! and the workflow finishes when the slowest part finishes, so the joint
//! CDF is the product of the per-channel CDFs. Mean and variance of the
//! joint time are tail integrals of that product, evaluated from `t = 0`.

use crate::error::{Error, Result};
use crate::normal::{std_cdf, std_pdf, std_sf};
use crate::quadrature::{integrate, QuadSettings};
use serde::Serialize;

/// Channels with more negative-time probability than this are flagged.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// Tolerance on the sum of a fraction vector.
pub const FRACTION_SUM_TOL: f64 = 1e-12;

/// Spread multiples placed as quadrature breakpoints around each channel.
const BREAKPOINT_SIGMAS: i32 = 8;

/// Cutoff of the tail integrals in combined standard deviations.
const CUTOFF_SIGMAS: f64 = 10.0;

/// Time for one channel to complete the full workflow: `N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelProfile {
    mu: f64,
    sigma: f64,
}

impl ChannelProfile {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::Domain(format!("channel mean must be positive and finite, got {mu}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!(
                "channel standard deviation must be positive and finite, got {sigma}"
            )));
        }
        Ok(ChannelProfile { mu, sigma })
    }

    /// The zero-spread limit of a profile. Only the sampler and the
    /// quadrature path accept it; the closed-form oracle rejects it.
    pub fn deterministic(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::Domain(format!("channel mean must be positive and finite, got {mu}")));
        }
        Ok(ChannelProfile { mu, sigma: 0.0 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// P(t < 0) under the untruncated Normal.
    pub fn negative_mass(&self) -> f64 {
        if self.sigma == 0.0 {
            0.0
        } else {
            std_cdf(-self.mu / self.sigma)
        }
    }

    pub fn is_truncation_biased(&self) -> bool {
        self.negative_mass() > TRUNCATION_THRESHOLD
    }

    /// Law of the completion time when the channel gets `fraction` of the work.
    pub fn scale(&self, fraction: f64) -> Result<ScaledProfile> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Domain(format!("fraction must lie in [0, 1], got {fraction}")));
        }
        Ok(ScaledProfile {
            mu_scaled: fraction * self.mu,
            sigma_scaled: fraction * self.sigma,
            fraction,
        })
    }
}

/// Free-function form of [`ChannelProfile::scale`].
pub fn scale_profile(profile: ChannelProfile, fraction: f64) -> Result<ScaledProfile> {
    profile.scale(fraction)
}

/// `N(f mu, (f sigma)^2)`. Zero spread means a point mass at `mu_scaled`
/// (at 0 when the fraction is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledProfile {
    pub mu_scaled: f64,
    pub sigma_scaled: f64,
    pub fraction: f64,
}

impl ScaledProfile {
    pub fn is_point_mass(&self) -> bool {
        self.sigma_scaled == 0.0
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if self.is_point_mass() {
            if t >= self.mu_scaled {
                1.0
            } else {
                0.0
            }
        } else {
            std_cdf((t - self.mu_scaled) / self.sigma_scaled)
        }
    }

    pub fn sf(&self, t: f64) -> f64 {
        if self.is_point_mass() {
            if t >= self.mu_scaled {
                0.0
            } else {
                1.0
            }
        } else {
            std_sf((t - self.mu_scaled) / self.sigma_scaled)
        }
    }

    /// Density; `None` for a point mass.
    pub fn pdf(&self, t: f64) -> Option<f64> {
        if self.is_point_mass() {
            None
        } else {
            Some(std_pdf((t - self.mu_scaled) / self.sigma_scaled) / self.sigma_scaled)
        }
    }

    pub fn negative_mass(&self) -> f64 {
        if self.is_point_mass() {
            0.0
        } else {
            std_cdf(-self.mu_scaled / self.sigma_scaled)
        }
    }
}

/// Channel profiles plus the share of the workflow each one receives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionedModel {
    channels: Vec<ChannelProfile>,
    fractions: Vec<f64>,
}

impl PartitionedModel {
    pub fn new(channels: Vec<ChannelProfile>, fractions: Vec<f64>) -> Result<Self> {
        if channels.len() < 2 {
            return Err(Error::Domain(format!(
                "a partitioned model needs at least two channels, got {}",
                channels.len()
            )));
        }
        if channels.len() != fractions.len() {
            return Err(Error::Domain(format!(
                "{} channels but {} fractions",
                channels.len(),
                fractions.len()
            )));
        }
        if let Some(bad) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::Domain(format!("fraction {bad} outside [0, 1]")));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::Domain(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(PartitionedModel { channels, fractions })
    }

    /// Two channels, `f` to the first and `1 - f` to the second.
    pub fn split(first: ChannelProfile, second: ChannelProfile, f: f64) -> Result<Self> {
        PartitionedModel::new(vec![first, second], vec![f, 1.0 - f])
    }

    pub fn channels(&self) -> &[ChannelProfile] {
        &self.channels
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn scaled(&self) -> Vec<ScaledProfile> {
        self.channels
            .iter()
            .zip(&self.fractions)
            .map(|(c, &f)| ScaledProfile {
                mu_scaled: f * c.mu,
                sigma_scaled: f * c.sigma,
                fraction: f,
            })
            .collect()
    }

    /// True when some working channel puts more than [`TRUNCATION_THRESHOLD`]
    /// of its probability below zero, where the tail integrals start.
    pub fn truncation_biased(&self) -> bool {
        self.scaled()
            .iter()
            .any(|s| s.fraction > 0.0 && s.negative_mass() > TRUNCATION_THRESHOLD)
    }
}

/// Mean and variance of the joint completion time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

/// Variance after clamping quadrature noise at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub clamped: bool,
}

/// Moments together with the diagnostics gathered while computing them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub moments: MomentPair,
    pub variance_clamped: bool,
    pub truncation_biased: bool,
    /// Combined quadrature error estimate (0 for closed-form shortcuts).
    pub error_bound: f64,
}

/// Normal channels plus the combined step of every point-mass channel.
struct JointLaw {
    normals: Vec<ScaledProfile>,
    /// CDF of the point-mass channels is `1{t >= step}`.
    step: Option<f64>,
}

impl JointLaw {
    fn of(model: &PartitionedModel) -> Self {
        let scaled = model.scaled();
        let step = scaled
            .iter()
            .filter(|s| s.is_point_mass())
            .map(|s| s.mu_scaled)
            .reduce(f64::max);
        let normals = scaled.into_iter().filter(|s| !s.is_point_mass()).collect();
        JointLaw { normals, step }
    }

    fn cdf(&self, t: f64) -> f64 {
        if matches!(self.step, Some(m) if t < m) {
            return 0.0;
        }
        self.normals.iter().map(|s| s.cdf(t)).product()
    }

    /// `1 - prod(1 - Q_k)` evaluated through logs to keep the far tail accurate.
    fn survival_of_normals(&self, t: f64) -> f64 {
        let log_cdf: f64 = self.normals.iter().map(|s| (-s.sf(t)).ln_1p()).sum();
        -log_cdf.exp_m1()
    }

    fn upper_cutoff(&self) -> f64 {
        let top = self
            .normals
            .iter()
            .map(|s| s.mu_scaled)
            .chain(self.step)
            .fold(0.0, f64::max);
        let spread = self.normals.iter().map(|s| s.sigma_scaled.powi(2)).sum::<f64>().sqrt();
        top + CUTOFF_SIGMAS * spread
    }

    fn breakpoints(&self, start: f64, end: f64) -> Vec<f64> {
        let mut bps = vec![start, end];
        for s in &self.normals {
            for k in -BREAKPOINT_SIGMAS..=BREAKPOINT_SIGMAS {
                let x = s.mu_scaled + k as f64 * s.sigma_scaled;
                if x > start && x < end {
                    bps.push(x);
                }
            }
        }
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        bps
    }
}

/// P(every part has finished by `epsilon`).
pub fn joint_cdf(model: &PartitionedModel, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {epsilon}")));
    }
    Ok(JointLaw::of(model).cdf(epsilon))
}

/// Density of the joint completion time, via the product rule on the CDF.
pub fn joint_pdf(model: &PartitionedModel, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    let law = JointLaw::of(model);
    match law.step {
        Some(m) if t == m => return Err(Error::UnsupportedPoint { t }),
        Some(m) if t < m => return Ok(0.0),
        _ => {}
    }
    let cdfs: Vec<f64> = law.normals.iter().map(|s| s.cdf(t)).collect();
    let mut density = 0.0;
    for (k, s) in law.normals.iter().enumerate() {
        let others: f64 = cdfs
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != k)
            .map(|(_, c)| c)
            .product();
        density += s.pdf(t).unwrap_or(0.0) * others;
    }
    Ok(density)
}

/// Mean and variance of the joint completion time by tail integration.
pub fn completion_moments(model: &PartitionedModel, quad: &QuadSettings) -> Result<MomentReport> {
    quad.validate()?;
    let truncation_biased = model.truncation_biased();
    let scaled = model.scaled();

    // A single working channel: its own law, exactly.
    let mut working = scaled.iter().filter(|s| s.fraction > 0.0);
    if let (Some(only), None) = (working.next(), working.next()) {
        return Ok(MomentReport {
            moments: MomentPair {
                mean: only.mu_scaled,
                variance: only.sigma_scaled * only.sigma_scaled,
            },
            variance_clamped: false,
            truncation_biased,
            error_bound: 0.0,
        });
    }

    let law = JointLaw::of(model);
    let start = law.step.unwrap_or(0.0).max(0.0);
    if law.normals.is_empty() {
        return Ok(MomentReport {
            moments: MomentPair {
                mean: start,
                variance: 0.0,
            },
            variance_clamped: false,
            truncation_biased,
            error_bound: 0.0,
        });
    }

    let end = law.upper_cutoff();
    let bps = law.breakpoints(start, end);
    // Below ~1e-14 relative the tolerance is under double-precision roundoff.
    let tol_first = quad.abs_tol.max(1e-14 * end);
    let tol_second = quad.abs_tol.max(1e-14 * end * end);

    let first = integrate(&|t| law.survival_of_normals(t), &bps, tol_first, quad.max_depth)?;
    let second = integrate(&|t| t * law.survival_of_normals(t), &bps, tol_second, quad.max_depth)?;

    let mean = start + first.value;
    let raw_variance = start * start + 2.0 * second.value - mean * mean;
    let variance_clamped = raw_variance < 0.0;
    Ok(MomentReport {
        moments: MomentPair {
            mean,
            variance: raw_variance.max(0.0),
        },
        variance_clamped,
        truncation_biased,
        error_bound: first.error_bound + 2.0 * second.error_bound,
    })
}

/// μ(f): expected joint completion time.
pub fn expected_completion(model: &PartitionedModel, quad: &QuadSettings) -> Result<f64> {
    completion_moments(model, quad).map(|r| r.moments.mean)
}

/// σ²(f): variance of the joint completion time, clamped at zero.
pub fn completion_variance(model: &PartitionedModel, quad: &QuadSettings) -> Result<VarianceEstimate> {
    completion_moments(model, quad).map(|r| VarianceEstimate {
        value: r.moments.variance,
        clamped: r.variance_clamped,
    })
}

/// Closed-form mean and variance of `max(A, B)` for independent Normals
/// (Clark's formulas), taken over the whole real line.
pub fn clark_moments(a: &ScaledProfile, b: &ScaledProfile) -> Result<MomentPair> {
    if a.is_point_mass() || b.is_point_mass() {
        return Err(Error::Degenerate(
            "closed-form max moments need positive spread on both inputs".into(),
        ));
    }
    let (m1, s1) = (a.mu_scaled, a.sigma_scaled);
    let (m2, s2) = (b.mu_scaled, b.sigma_scaled);
    let theta = s1.hypot(s2);
    let alpha = (m1 - m2) / theta;
    let p = std_cdf(alpha);
    let q = std_sf(alpha);
    let phi = std_pdf(alpha);
    let mean = m1 * p + m2 * q + theta * phi;
    let second = (m1 * m1 + s1 * s1) * p + (m2 * m2 + s2 * s2) * q + (m1 + m2) * theta * phi;
    Ok(MomentPair {
        mean,
        variance: (second - mean * mean).max(0.0),
    })
}
