//! Mean–variance sweeps over the split and their efficient frontier.

use crate::error::{Error, Result};
use crate::model::{completion_moments, ChannelProfile, PartitionedModel};
use crate::quadrature::QuadSettings;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// Default fraction step for analytic sweeps.
pub const DEFAULT_STEP: f64 = 0.01;

/// Largest lattice the simplex sweep will enumerate.
pub const SIMPLEX_POINT_CAP: usize = 1_000_000;

/// Most channels the simplex sweep accepts.
pub const MAX_SIMPLEX_CHANNELS: usize = 4;

/// One evaluated split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentPoint {
    /// Share of the workflow per channel; `[f, 1 - f]` for two channels.
    pub fractions: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Not dominated by any other point of the same sweep.
    pub pareto: bool,
}

impl MomentPoint {
    /// Fraction given to the first channel.
    pub fn f(&self) -> f64 {
        self.fractions[0]
    }

    fn dominates(&self, other: &MomentPoint) -> bool {
        self.mean <= other.mean
            && self.variance <= other.variance
            && (self.mean < other.mean || self.variance < other.variance)
    }
}

/// What "best split" means when picking one point off a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Objective {
    MinMean,
    MinVariance,
    /// Minimise `mean + k * sqrt(variance)`.
    MeanPlusKSigma(f64),
    /// Minimise `mean + lambda * variance`.
    Scalarized(f64),
}

impl Objective {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Objective::MeanPlusKSigma(p) | Objective::Scalarized(p) if !(p.is_finite() && p >= 0.0) => {
                Err(Error::Domain(format!("objective parameter must be finite and nonnegative, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn score(&self, p: &MomentPoint) -> f64 {
        match *self {
            Objective::MinMean => p.mean,
            Objective::MinVariance => p.variance,
            Objective::MeanPlusKSigma(k) => p.mean + k * p.variance.sqrt(),
            Objective::Scalarized(lambda) => p.mean + lambda * p.variance,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::MinMean => write!(f, "min-mean"),
            Objective::MinVariance => write!(f, "min-variance"),
            Objective::MeanPlusKSigma(k) => write!(f, "mean-plus-k-sigma:{k}"),
            Objective::Scalarized(l) => write!(f, "scalarized:{l}"),
        }
    }
}

/// Parses `min-mean`, `min-variance`, `mean-plus-k-sigma:K`, `scalarized:LAMBDA`.
impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let param = |name: &str| -> Result<f64> {
            let raw = arg.ok_or_else(|| Error::Domain(format!("objective {name} needs a parameter, e.g. {name}:1.0")))?;
            raw.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad objective parameter {raw:?}")))
        };
        let obj = match kind.trim() {
            "min-mean" => Objective::MinMean,
            "min-variance" => Objective::MinVariance,
            "mean-plus-k-sigma" => Objective::MeanPlusKSigma(param("mean-plus-k-sigma")?),
            "scalarized" => Objective::Scalarized(param("scalarized")?),
            other => return Err(Error::Domain(format!("unknown objective {other:?}"))),
        };
        obj.validate()?;
        Ok(obj)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Sets `pareto` on every point; duplicates of an efficient point are all marked.
pub fn mark_pareto(points: &mut [MomentPoint]) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .mean
            .total_cmp(&points[j].mean)
            .then(points[i].variance.total_cmp(&points[j].variance))
    });
    let mut best_variance = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let mean = points[order[start]].mean;
        let mut end = start;
        while end < order.len() && points[order[end]].mean == mean {
            end += 1;
        }
        let group_min = points[order[start]].variance;
        for &idx in &order[start..end] {
            points[idx].pareto = points[idx].variance == group_min && group_min < best_variance;
        }
        best_variance = best_variance.min(group_min);
        start = end;
    }
}

/// The non-dominated subset, sorted by mean ascending with exact
/// duplicates of `(mean, variance)` collapsed to their first occurrence.
pub fn pareto_frontier(points: &[MomentPoint]) -> Result<Vec<MomentPoint>> {
    if points.is_empty() {
        return Err(Error::Domain("cannot take the frontier of an empty sweep".into()));
    }
    let mut marked = points.to_vec();
    mark_pareto(&mut marked);
    let mut front: Vec<MomentPoint> = marked.into_iter().filter(|p| p.pareto).collect();
    front.sort_by(|a, b| {
        a.mean
            .total_cmp(&b.mean)
            .then(a.variance.total_cmp(&b.variance))
            .then(lex_cmp(&a.fractions, &b.fractions))
    });
    front.dedup_by(|later, earlier| later.mean == earlier.mean && later.variance == earlier.variance);
    Ok(front)
}

/// Picks the point minimising `objective`; ties go to the smallest fraction vector.
pub fn select_fraction(points: &[MomentPoint], objective: Objective) -> Result<MomentPoint> {
    objective.validate()?;
    if points.is_empty() {
        return Err(Error::Domain("cannot select from an empty sweep".into()));
    }
    let mut marked = points.to_vec();
    mark_pareto(&mut marked);
    marked
        .into_iter()
        .min_by(|a, b| {
            objective
                .score(a)
                .total_cmp(&objective.score(b))
                .then(lex_cmp(&a.fractions, &b.fractions))
        })
        .ok_or_else(|| Error::Domain("empty sweep".into()))
}

/// Grid `{0, step, ..., 1}` as `(f, 1 - f)` pairs. When `1/step` is an
/// integer `m` the points are `k/m` exactly.
pub fn fraction_grid(step: f64) -> Result<Vec<[f64; 2]>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Domain(format!("grid step must lie in (0, 0.5], got {step}")));
    }
    let m = (1.0 / step).round();
    if ((m * step) - 1.0).abs() < 1e-9 {
        let m = m as u64;
        return Ok((0..=m)
            .map(|k| [k as f64 / m as f64, (m - k) as f64 / m as f64])
            .collect());
    }
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let f = k as f64 * step;
        if f >= 1.0 - 1e-12 {
            break;
        }
        out.push([f, 1.0 - f]);
        k += 1;
    }
    out.push([1.0, 0.0]);
    Ok(out)
}

fn evaluate(profiles: &[ChannelProfile], fractions: Vec<Vec<f64>>, quad: &QuadSettings) -> Result<Vec<MomentPoint>> {
    quad.validate()?;
    let mut points = fractions
        .into_par_iter()
        .map(|fr| {
            let model = PartitionedModel::new(profiles.to_vec(), fr.clone())?;
            let report = completion_moments(&model, quad).map_err(|e| e.at_fractions(&fr))?;
            Ok(MomentPoint {
                fractions: fr,
                mean: report.moments.mean,
                variance: report.moments.variance,
                pareto: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    mark_pareto(&mut points);
    Ok(points)
}

/// μ(f) and σ²(f) over the grid `{0, step, ..., 1}`, ordered by `f`, Pareto-marked.
pub fn sweep_curve(a: ChannelProfile, b: ChannelProfile, step: f64, quad: &QuadSettings) -> Result<Vec<MomentPoint>> {
    let grid = fraction_grid(step)?;
    evaluate(&[a, b], grid.into_iter().map(|p| p.to_vec()).collect(), quad)
}

/// Same as [`sweep_curve`] on an explicit list of first-channel fractions.
pub fn sweep_fractions(a: ChannelProfile, b: ChannelProfile, fs: &[f64], quad: &QuadSettings) -> Result<Vec<MomentPoint>> {
    if fs.is_empty() {
        return Err(Error::Domain("empty fraction list".into()));
    }
    if let Some(bad) = fs.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Domain(format!("fraction {bad} outside [0, 1]")));
    }
    let mut sorted = fs.to_vec();
    sorted.sort_by(f64::total_cmp);
    evaluate(&[a, b], sorted.into_iter().map(|f| vec![f, 1.0 - f]).collect(), quad)
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of fraction vectors with `channels` entries that are multiples of `1/m`.
pub fn simplex_size(channels: usize, m: u64) -> u128 {
    binomial(m + channels as u64 - 1, channels as u64 - 1)
}

fn compositions(m: u64, parts: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<f64>>) {
    if parts == 1 {
        let used: u64 = prefix.iter().sum();
        let mut counts = prefix.clone();
        counts.push(m - used);
        out.push(counts.iter().map(|&c| c as f64 / m as f64).collect());
        return;
    }
    let used: u64 = prefix.iter().sum();
    for k in 0..=(m - used) {
        prefix.push(k);
        compositions(m, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Every fraction vector on the lattice simplex of spacing `resolution`,
/// in lexicographic order, with moments and Pareto marks.
pub fn sweep_simplex(profiles: &[ChannelProfile], resolution: f64, quad: &QuadSettings) -> Result<Vec<MomentPoint>> {
    let n = profiles.len();
    if !(2..=MAX_SIMPLEX_CHANNELS).contains(&n) {
        if n > MAX_SIMPLEX_CHANNELS {
            return Err(Error::Resource(format!(
                "simplex sweep supports at most {MAX_SIMPLEX_CHANNELS} channels, got {n}"
            )));
        }
        return Err(Error::Domain(format!("simplex sweep needs at least 2 channels, got {n}")));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Domain(format!("resolution must lie in (0, 1], got {resolution}")));
    }
    let m = (1.0 / resolution).round();
    if ((m * resolution) - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("resolution {resolution} does not divide 1")));
    }
    let m = m as u64;
    let size = simplex_size(n, m);
    if size > SIMPLEX_POINT_CAP as u128 {
        return Err(Error::Resource(format!(
            "simplex lattice has {size} points, cap is {SIMPLEX_POINT_CAP}"
        )));
    }
    let mut fractions = Vec::with_capacity(size as usize);
    compositions(m, n, &mut Vec::with_capacity(n), &mut fractions);
    evaluate(profiles, fractions, quad)
}

/// Brute-force O(n²) dominance filter; kept for cross-checking [`pareto_frontier`].
pub fn non_dominated_brute_force(points: &[MomentPoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| q.dominates(&points[i])))
        .collect()
}
