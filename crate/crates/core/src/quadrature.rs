//! Adaptive Simpson quadrature over a partition of seeded panels.
//!
//! Integrands in this crate are smooth but can have features that are
//! narrow compared with the integration range (a scaled channel with a
//! tiny spread next to a wide one). Callers therefore pass breakpoints
//! placed around every feature; each panel is then refined independently
//! with a share of the tolerance proportional to its width.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    /// Absolute tolerance on each integral.
    pub abs_tol: f64,
    /// Maximum bisection depth inside a panel.
    pub max_depth: u32,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            abs_tol: 1e-9,
            max_depth: 48,
        }
    }
}

impl QuadSettings {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadSettings {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            return Err(Error::Domain(format!(
                "quadrature tolerance must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Domain("quadrature depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the Richardson error estimates of all accepted intervals.
    pub error_bound: f64,
    pub evaluations: usize,
}

struct State<'f, F> {
    f: &'f F,
    error_bound: f64,
    evaluations: usize,
    max_depth: u32,
}

impl<F: Fn(f64) -> f64> State<'_, F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evaluations += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, fa: f64, m: f64, fm: f64, b: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || depth >= self.max_depth || lm <= a || rm >= b {
            self.error_bound += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        self.refine(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1)
            + self.refine(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Integrates `f` over `[breakpoints[0], breakpoints[last]]`.
///
/// Breakpoints must be sorted ascending; duplicates are skipped. Fails with
/// [`Error::Quadrature`] when the accumulated error bound exceeds `tol`.
pub fn integrate<F>(f: &F, breakpoints: &[f64], tol: f64, max_depth: u32) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    if breakpoints.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    let lo = breakpoints[0];
    let hi = breakpoints[breakpoints.len() - 1];
    let width = hi - lo;
    let mut state = State {
        f,
        error_bound: 0.0,
        evaluations: 0,
        max_depth,
    };
    if width <= 0.0 {
        return Ok(Integral {
            value: 0.0,
            error_bound: 0.0,
            evaluations: 0,
        });
    }

    let mut total = 0.0;
    let mut a = lo;
    let mut fa = state.eval(a);
    for &b in &breakpoints[1..] {
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let fm = state.eval(m);
        let fb = state.eval(b);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let panel_tol = tol * (b - a) / width;
        total += state.refine(a, fa, m, fm, b, fb, whole, panel_tol, 1);
        a = b;
        fa = fb;
    }

    if state.error_bound > tol {
        return Err(Error::Quadrature {
            estimate: total,
            error_bound: state.error_bound,
            tolerance: tol,
        });
    }
    Ok(Integral {
        value: total,
        error_bound: state.error_bound,
        evaluations: state.evaluations,
    })
}
