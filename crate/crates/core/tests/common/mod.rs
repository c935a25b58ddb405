//! Randomised invariants shared by the property tests and the acceptance run.
//! Each runs 128 cases from a fixed-seed generator.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use splitflow::opt::Dataset;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use splitflow::frontier::non_dominated_brute_force;
use splitflow::{
    clark_moments, completion_moments, estimate_moments, joint_cdf, joint_pdf, pareto_frontier, select_fraction,
    ChannelProfile, MomentPoint, Objective, PartitionedModel, QuadSettings, RunningMoments, SimConfig,
};

pub const CASES: u32 = 128;

fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S, F>(strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

/// Profiles with negligible mass below zero.
pub fn profile() -> impl Strategy<Value = ChannelProfile> {
    (1.0f64..100.0, 0.01f64..0.16).prop_map(|(mu, cv)| ChannelProfile::new(mu, mu * cv).unwrap())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn eval(a: ChannelProfile, b: ChannelProfile, f: f64) -> (f64, f64) {
    let r = completion_moments(&PartitionedModel::split(a, b, f).unwrap(), &QuadSettings::default()).unwrap();
    (r.moments.mean, r.moments.variance)
}

pub fn two_pass(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn cdf_monotone_and_bounded() -> Result<(), String> {
    let s = (profile(), profile(), 0.0f64..=1.0, proptest::collection::vec(0.0f64..150.0, 2..40));
    check(s, |(a, b, f, mut ts)| {
        let m = PartitionedModel::split(a, b, f).unwrap();
        ts.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for t in ts {
            let c = joint_cdf(&m, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(c >= prev, "cdf fell from {prev} to {c} at {t}");
            prev = c;
        }
        Ok(())
    })
}

pub fn channel_swap_symmetry() -> Result<(), String> {
    check((profile(), profile(), 0.0f64..=1.0, 0.0f64..150.0), |(a, b, f, t)| {
        let m = PartitionedModel::split(a, b, f).unwrap();
        let s = PartitionedModel::split(b, a, 1.0 - f).unwrap();
        prop_assert!((joint_cdf(&m, t).unwrap() - joint_cdf(&s, t).unwrap()).abs() <= 1e-12);
        let (m1, v1) = eval(a, b, f);
        let (m2, v2) = eval(b, a, 1.0 - f);
        prop_assert!(rel(m1, m2) <= 1e-12, "{m1} vs {m2}");
        prop_assert!(rel(v1, v2) <= 1e-12 || (v1 - v2).abs() <= 1e-12, "{v1} vs {v2}");
        Ok(())
    })
}

pub fn time_scale_equivariance() -> Result<(), String> {
    check((profile(), profile(), 0.01f64..0.99, 0.01f64..100.0), |(a, b, f, c)| {
        let (m, v) = eval(a, b, f);
        let scale = |p: ChannelProfile| ChannelProfile::new(p.mu() * c, p.sigma() * c).unwrap();
        let (mc, vc) = eval(scale(a), scale(b), f);
        prop_assert!(rel(mc, m * c) <= 1e-8, "{mc} vs {}", m * c);
        prop_assert!(rel(vc, v * c * c) <= 1e-6, "{vc} vs {}", v * c * c);
        Ok(())
    })
}

pub fn quadrature_matches_closed_form() -> Result<(), String> {
    check((profile(), profile(), 0.01f64..0.99), |(a, b, f)| {
        let m = PartitionedModel::split(a, b, f).unwrap();
        let s = m.scaled();
        let oracle = clark_moments(&s[0], &s[1]).unwrap();
        let (mean, var) = eval(a, b, f);
        prop_assert!((mean - oracle.mean).abs() <= (1e-6 * oracle.mean.abs()).max(1e-8));
        prop_assert!(
            (var - oracle.variance).abs() <= (1e-6 * oracle.variance.abs()).max(1e-8),
            "{var} vs {}",
            oracle.variance
        );
        Ok(())
    })
}

/// Centered difference with `h = 1e-5` times the law's spread.
pub fn pdf_matches_finite_difference() -> Result<(), String> {
    check((profile(), profile(), 0.01f64..0.99, -3.0f64..3.0), |(a, b, f, z)| {
        let m = PartitionedModel::split(a, b, f).unwrap();
        let s = m.scaled();
        let spread = s.iter().map(|p| p.sigma_scaled).fold(0.0, f64::max);
        let centre = s.iter().map(|p| p.mu_scaled).fold(0.0, f64::max);
        let h = 1e-5 * spread;
        let t = (centre + z * spread).max(2.0 * h);
        let fd = (joint_cdf(&m, t + h).unwrap() - joint_cdf(&m, t - h).unwrap()) / (2.0 * h);
        let pdf = joint_pdf(&m, t).unwrap();
        prop_assert!((pdf - fd).abs() <= 1e-6, "pdf {pdf} fd {fd} at t={t}");
        Ok(())
    })
}

pub fn max_dominates_each_part() -> Result<(), String> {
    check((profile(), profile(), 0.0f64..=1.0), |(a, b, f)| {
        let (mean, var) = eval(a, b, f);
        prop_assert!(var >= 0.0);
        prop_assert!(mean >= (f * a.mu()).max((1.0 - f) * b.mu()) - 1e-6);
        Ok(())
    })
}

/// Small integer moments so ties and duplicates are common.
pub fn pareto_idempotent_and_exact() -> Result<(), String> {
    check(proptest::collection::vec((0u8..12, 0u8..12), 1..60), |raw| {
        let points: Vec<MomentPoint> = raw
            .iter()
            .enumerate()
            .map(|(i, &(m, v))| {
                let f = i as f64 / raw.len() as f64;
                MomentPoint { fractions: vec![f, 1.0 - f], mean: m as f64, variance: v as f64, pareto: false }
            })
            .collect();
        let front = pareto_frontier(&points).unwrap();
        let again = pareto_frontier(&front).unwrap();
        prop_assert_eq!(&front, &again);

        let mut expected: Vec<(f64, f64)> = non_dominated_brute_force(&points)
            .into_iter()
            .map(|i| (points[i].mean, points[i].variance))
            .collect();
        expected.sort_by(|x, y| x.0.total_cmp(&y.0));
        expected.dedup();
        let got: Vec<(f64, f64)> = front.iter().map(|p| (p.mean, p.variance)).collect();
        prop_assert_eq!(got, expected);
        for p in &front {
            prop_assert!(points.iter().any(|q| q.fractions == p.fractions && q.mean == p.mean));
            for q in &front {
                let dominates =
                    p.mean <= q.mean && p.variance <= q.variance && (p.mean < q.mean || p.variance < q.variance);
                prop_assert!(!dominates);
            }
        }
        let best = select_fraction(&points, Objective::MinMean).unwrap();
        prop_assert!(points.iter().all(|q| best.mean <= q.mean));
        let best = select_fraction(&points, Objective::MinVariance).unwrap();
        prop_assert!(points.iter().all(|q| best.variance <= q.variance));
        Ok(())
    })
}

pub fn streaming_matches_batch() -> Result<(), String> {
    let s = (proptest::collection::vec(0.0f64..1e3, 2..400), 0.0f64..1.0, 0i32..6);
    check(s, |(xs, cut, shift_exp)| {
        let shift = 10f64.powi(shift_exp);
        let xs: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let acc: RunningMoments = xs.iter().copied().collect();
        let (mean, var) = two_pass(&xs);
        prop_assert!(rel(acc.mean(), mean) <= 1e-12);
        if var > 0.0 {
            prop_assert!(rel(acc.variance().unwrap(), var) <= 1e-9);
        }
        let k = ((xs.len() as f64) * cut) as usize;
        let left: RunningMoments = xs[..k].iter().copied().collect();
        let right: RunningMoments = xs[k..].iter().copied().collect();
        let merged = left.merge(&right);
        prop_assert_eq!(merged.count(), acc.count());
        prop_assert!(rel(merged.mean(), mean) <= 1e-12);
        if var > 0.0 {
            prop_assert!(rel(merged.variance().unwrap(), var) <= 1e-9);
        }
        Ok(())
    })
}

pub fn simulation_reproducible() -> Result<(), String> {
    check((profile(), profile(), 0.0f64..=1.0, any::<u64>()), |(a, b, f, seed)| {
        let m = PartitionedModel::split(a, b, f).unwrap();
        let cfg = SimConfig::new(5000, seed);
        let first = estimate_moments(&m, &cfg).unwrap();
        let second = estimate_moments(&m, &cfg).unwrap();
        prop_assert_eq!(first, second);
        Ok(())
    })
}

/// Every property above, by name, for callers that want to run them all.
pub fn all() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![
        ("CDF monotonicity and bounds", cdf_monotone_and_bounded),
        ("channel-swap symmetry", channel_swap_symmetry),
        ("time-scale equivariance", time_scale_equivariance),
        ("quadrature vs closed form", quadrature_matches_closed_form),
        ("pdf vs finite difference", pdf_matches_finite_difference),
        ("max dominates each part", max_dominates_each_part),
        ("Pareto idempotence", pareto_idempotent_and_exact),
        ("streaming vs batch moments", streaming_matches_batch),
        ("simulation reproducibility", simulation_reproducible),
    ]
}

/// Random design with condition number of XᵀX at most `kappa`.
pub fn conditioned_instance(rng: &mut ChaCha8Rng, n: usize, d: usize, kappa: f64) -> (Dataset, DVector<f64>) {
    loop {
        let scales: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..5.0)).collect();
        let x = DMatrix::from_fn(n, d, |_, c| rng.sample::<f64, _>(StandardNormal) * scales[c]);
        let gram = x.transpose() * &x;
        let eig = gram.clone().symmetric_eigenvalues();
        if eig.max() / eig.min() > kappa {
            continue;
        }
        let theta = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        let y = &x * &theta + DVector::from_fn(n, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
        let oracle = gram.cholesky().unwrap().solve(&(x.transpose() * &y));
        return (Dataset::new(x, y).unwrap(), oracle);
    }
}

