use super::dataset::Dataset;
use crate::error::{Error, Result};
use nalgebra::{DVector, SymmetricEigen};
use serde::Serialize;

/// Gram matrices with `λ_min / λ_max` below this are treated as rank deficient.
const RANK_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Stop once the gradient norm is at or below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo_c: f64,
    /// Step multiplier after a rejected trial step.
    pub shrink: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-8,
            max_iter: 100_000,
            armijo_c: 1e-4,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Smallest eigenvalue of `XᵀX / n`; bounds `‖θ − θ*‖ ≤ ‖∇‖ / λ_min`.
    pub lambda_min: f64,
}

/// Gradient descent with Armijo backtracking on `‖Xθ − y‖² / (2n)`.
pub fn solve_least_squares(data: &Dataset, settings: &SolverSettings) -> Result<Solution> {
    solve_least_squares_with(data, settings, |_| {})
}

/// As [`solve_least_squares`], calling `on_iteration(k)` once per gradient step.
pub fn solve_least_squares_with<F>(data: &Dataset, settings: &SolverSettings, mut on_iteration: F) -> Result<Solution>
where
    F: FnMut(usize),
{
    if !(settings.tol > 0.0 && settings.armijo_c > 0.0 && settings.armijo_c < 1.0) {
        return Err(Error::Domain("solver tolerance and Armijo constant must be positive".into()));
    }
    if !(settings.shrink > 0.0 && settings.shrink < 1.0) {
        return Err(Error::Domain(format!("shrink factor must lie in (0, 1), got {}", settings.shrink)));
    }
    let x = data.features();
    let y = data.targets();
    let n = data.rows() as f64;

    let gram = x.tr_mul(x) / n;
    let eigen = SymmetricEigen::new(gram).eigenvalues;
    let lambda_max = eigen.max();
    let lambda_min = eigen.min();
    if !(lambda_max > 0.0) || lambda_min <= RANK_GUARD * lambda_max {
        return Err(Error::Data(format!(
            "design is rank deficient (eigenvalue ratio {:e})",
            lambda_min / lambda_max
        )));
    }

    // Optimal fixed step for a quadratic, 2 / (λ_max + λ_min); Armijo still
    // guards it, shrinking only when κ is beyond about 1/c.
    let first_step = 2.0 / (lambda_max + lambda_min);
    let mut theta = DVector::zeros(data.dim());
    let mut residual = x * &theta - y;

    for k in 0..settings.max_iter {
        let grad = x.tr_mul(&residual) / n;
        let gnorm = grad.norm();
        if gnorm <= settings.tol {
            return Ok(Solution {
                theta: theta.iter().copied().collect(),
                iterations: k,
                gradient_norm: gnorm,
                lambda_min,
            });
        }
        on_iteration(k);

        // Exact decrease of the quadratic along -g:
        // f(θ) - f(θ - t·g) = t‖g‖² - t²‖Xg‖² / (2n).
        // Differencing two loss values instead loses it to rounding near the optimum.
        let g2 = gnorm * gnorm;
        let curvature = (x * &grad).norm_squared() / n;
        let mut t = first_step;
        while t * g2 - 0.5 * t * t * curvature < settings.armijo_c * t * g2 {
            t *= settings.shrink;
            if t < f64::MIN_POSITIVE {
                return Err(Error::Convergence {
                    iterations: k,
                    gradient_norm: gnorm,
                    last_iterate: theta.iter().copied().collect(),
                });
            }
        }
        theta -= &grad * t;
        residual = x * &theta - y;
    }

    let gnorm = (x.tr_mul(&residual) / n).norm();
    if gnorm <= settings.tol {
        return Ok(Solution {
            theta: theta.iter().copied().collect(),
            iterations: settings.max_iter,
            gradient_norm: gnorm,
            lambda_min,
        });
    }
    Err(Error::Convergence {
        iterations: settings.max_iter,
        gradient_norm: gnorm,
        last_iterate: theta.iter().copied().collect(),
    })
}

/// Shard solutions and their `f`-weighted combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedSolution {
    pub theta_i: Vec<f64>,
    pub theta_j: Vec<f64>,
    pub theta: Vec<f64>,
    pub fraction: f64,
}

/// `θ = f θ_i + (1 − f) θ_j`, element-wise. Coordinates where both
/// solutions agree are copied, so a common solution is a fixed point.
pub fn combine(theta_i: &[f64], theta_j: &[f64], fraction: f64) -> Result<CombinedSolution> {
    if theta_i.len() != theta_j.len() {
        return Err(Error::Domain(format!(
            "cannot combine solutions of dimension {} and {}",
            theta_i.len(),
            theta_j.len()
        )));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let theta = theta_i
        .iter()
        .zip(theta_j)
        .map(|(&a, &b)| if a == b { a } else { fraction * a + (1.0 - fraction) * b })
        .collect();
    Ok(CombinedSolution {
        theta_i: theta_i.to_vec(),
        theta_j: theta_j.to_vec(),
        theta,
        fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn one_coefficient_line() {
        let data = Dataset::new(DMatrix::from_column_slice(2, 1, &[1.0, 2.0]), DVector::from_column_slice(&[2.0, 4.0])).unwrap();
        let s = solve_least_squares(&data, &SolverSettings::default()).unwrap();
        assert!((s.theta[0] - 2.0).abs() < 1e-8);
        assert!(s.gradient_norm <= 1e-8);
    }

    #[test]
    fn zero_targets_give_zero() {
        let (data, _) = Dataset::synthetic(50, 4, 0.0, 3).unwrap();
        let zeroed = Dataset::new(data.features().clone(), DVector::zeros(50)).unwrap();
        let s = solve_least_squares(&zeroed, &SolverSettings::default()).unwrap();
        assert_eq!(s.theta, vec![0.0; 4]);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn rank_deficiency_is_a_data_error() {
        let x = DMatrix::from_fn(10, 2, |r, _| r as f64);
        let data = Dataset::new(x, DVector::from_fn(10, |r, _| r as f64)).unwrap();
        assert!(matches!(solve_least_squares(&data, &SolverSettings::default()), Err(Error::Data(_))));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let (data, _) = Dataset::synthetic(40, 3, 0.1, 9).unwrap();
        let settings = SolverSettings { max_iter: 1, ..Default::default() };
        match solve_least_squares(&data, &settings) {
            Err(Error::Convergence { iterations, last_iterate, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(last_iterate.len(), 3);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn callback_runs_once_per_step() {
        let (data, _) = Dataset::synthetic(40, 3, 0.1, 9).unwrap();
        let mut calls = 0;
        let s = solve_least_squares_with(&data, &SolverSettings::default(), |_| calls += 1).unwrap();
        assert_eq!(calls, s.iterations);
        assert!(calls > 0);
    }

    #[test]
    fn combine_identities() {
        let v = [0.1, -3.7, 1e-9];
        for f in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert_eq!(combine(&v, &v, f).unwrap().theta, v.to_vec());
        }
        let a = [0.1, 0.2];
        let b = [0.3, 0.7];
        assert_eq!(combine(&a, &b, 1.0).unwrap().theta, a.to_vec());
        assert_eq!(combine(&a, &b, 0.0).unwrap().theta, b.to_vec());
        assert_eq!(combine(&[1.0, 0.0], &[0.0, 1.0], 0.5).unwrap().theta, vec![0.5, 0.5]);
        assert!(matches!(combine(&[1.0], &[1.0, 2.0], 0.5), Err(Error::Domain(_))));
    }
}
