//! Time marching for the discretised Volterra equation, stability
//! coefficients, manufactured data and convergence studies.

use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::{CoefficientSequence, TemporalBasis};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::Kernel;
use crate::quadrature::adaptive_integrate;
use crate::weights::{compute_weights, WeightSequence};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default absolute tolerance for manufactured right-hand sides.
pub const RHS_TOL: f64 = 1e-12;

/// Errors below this are treated as round-off and left out of order fits.
pub const ERROR_FLOOR: f64 = 1e-14;

/// A Volterra problem `∫_0^t K(t') u(t - t') dt' = a(t)` on a grid.
#[derive(Clone)]
pub struct VieProblem {
    pub kernel: Kernel,
    pub rhs: ScalarFn,
    pub grid: TimeGrid,
    pub basis: TemporalBasis,
}

impl VieProblem {
    pub fn rhs_samples(&self) -> Vec<f64> {
        self.grid.times().map(|t| (self.rhs)(t)).collect()
    }

    pub fn solve(&self) -> Result<CoefficientSequence> {
        let w = compute_weights(&self.kernel, self.basis, self.grid)?;
        march(&w, &self.rhs_samples())
    }
}

/// Impulse response `p_n` of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySequence {
    pub p: Vec<f64>,
}

impl StabilitySequence {
    /// `max_n |p_n|`, infinite if any entry overflowed.
    pub fn max_abs(&self) -> f64 {
        self.p
            .iter()
            .map(|v| if v.is_finite() { v.abs() } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }
}

fn leading_weight(weights: &WeightSequence) -> Result<f64> {
    let q0 = weights.get(0);
    if q0 == 0.0 || !q0.is_finite() {
        return Err(Error::SingularLeadingWeight(q0));
    }
    Ok(q0)
}

/// Solve `Σ_j q_j x_{n-j} = b_n` for `n >= 1`, keeping `x_0` as given.
fn convolve_solve(q: &[f64], width: usize, q0: f64, b: &[f64], x: &mut [f64]) {
    for n in 1..x.len() {
        let jmax = n.min(width.saturating_sub(1));
        let mut acc = b[n];
        for j in 1..=jmax {
            acc -= q[j] * x[n - j];
        }
        x[n] = acc / q0;
    }
}

/// March `v_n = (a_n - Σ_{j>=1} q_j v_{n-j}) / q_0` from `v_0 = 0`.
///
/// Weights past the end of the stored sequence count as zero.
pub fn march(weights: &WeightSequence, a_samples: &[f64]) -> Result<CoefficientSequence> {
    if a_samples.len() < 2 {
        return Err(Error::InvalidParameter("need samples at two or more time levels".into()));
    }
    if a_samples[0] != 0.0 {
        return Err(Error::InvalidParameter(format!("a(0) must vanish, got {}", a_samples[0])));
    }
    let q0 = leading_weight(weights)?;
    let n = a_samples.len() - 1;
    let width = weights.support_len();
    let mut v = vec![0.0; n + 1];
    convolve_solve(&weights.q, width, q0, a_samples, &mut v);
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("coefficient v_{k}")));
    }
    CoefficientSequence::new(v, TimeGrid::new(weights.dt, n)?, weights.basis)
}

/// `p_0 = 1`, `p_n = -(1/q_0) Σ_{j=1}^n q_j p_{n-j}`. Overflow is kept as ±∞.
pub fn stability_coeffs(weights: &WeightSequence, n_max: usize) -> Result<StabilitySequence> {
    let q0 = leading_weight(weights)?;
    let width = weights.support_len();
    let mut p = vec![0.0; n_max + 1];
    p[0] = 1.0;
    let zeros = vec![0.0; n_max + 1];
    convolve_solve(&weights.q, width, q0, &zeros, &mut p);
    Ok(StabilitySequence { p })
}

/// `a(t_n) = ∫_0^{t_n} K(t') u(t_n - t') dt'` by adaptive quadrature.
pub fn manufactured_rhs(
    u_exact: &(dyn Fn(f64) -> f64 + Sync),
    kernel: &Kernel,
    grid: TimeGrid,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if u_exact(0.0) != 0.0 {
        return Err(Error::InvalidParameter("manufactured solution must vanish at t = 0".into()));
    }
    let jumps = kernel.jumps();
    (0..=grid.n_steps())
        .into_par_iter()
        .map(|n| {
            let t = grid.time(n);
            if n == 0 {
                return Ok(0.0);
            }
            adaptive_integrate(|s| kernel.eval_unchecked(s) * u_exact(t - s), 0.0, t, &jumps, tol, 0.0)
        })
        .collect()
}

/// `max |u(T - s) - U_N(T - s)|` over lags `s` measured back from the final time.
///
/// Lags must lie in `[t_min, T]`.
pub fn vie_error(
    coeffs: &CoefficientSequence,
    u_exact: &dyn Fn(f64) -> f64,
    lags: &[f64],
    t_min: f64,
) -> Result<f64> {
    if lags.is_empty() {
        return Err(Error::InvalidParameter("no sample times given".into()));
    }
    let horizon = coeffs.grid.horizon();
    let slack = 1e-12 * horizon;
    let mut worst = 0.0f64;
    for &s in lags {
        if !(s >= t_min - slack && s <= horizon + slack) {
            return Err(Error::OutOfRange { t: s, lo: t_min, hi: horizon });
        }
        let t = (horizon - s).clamp(0.0, horizon);
        worst = worst.max((u_exact(t) - coeffs.reconstruct(t)?).abs());
    }
    Ok(worst)
}

/// Grid lags `k Δt` for `k` from the basis' minimum lag to `N`.
pub fn node_lags(basis: TemporalBasis, grid: TimeGrid) -> Vec<f64> {
    (basis.min_error_lag()..=grid.n_steps()).map(|k| grid.time(k)).collect()
}

/// How the error of a convergence run is measured.
#[derive(Clone)]
pub enum Reference {
    /// Known solution; the right-hand side is manufactured from it.
    Exact(ScalarFn),
    /// Only `a(t)` is known; errors are taken against a run `refine` times finer.
    SelfConvergence { rhs: ScalarFn, refine: usize },
}

#[derive(Clone)]
pub struct ConvergenceProblem {
    pub kernel: Kernel,
    pub horizon: f64,
    pub reference: Reference,
}

impl ConvergenceProblem {
    /// `u(t) = t⁶ e^{-t}` on `[0, 10]`.
    pub fn smooth(kernel: Kernel) -> Self {
        Self {
            kernel,
            horizon: 10.0,
            reference: Reference::Exact(Arc::new(|t: f64| t.powi(6) * (-t).exp())),
        }
    }

    /// Driving term `a(t) = t⁶ exp(-50 (t - 1/2)²)` on `[0, 10]`, against a 4× finer run.
    pub fn pulse(kernel: Kernel) -> Self {
        Self {
            kernel,
            horizon: 10.0,
            reference: Reference::SelfConvergence {
                rhs: Arc::new(|t: f64| t.powi(6) * (-50.0 * (t - 0.5) * (t - 0.5)).exp()),
                refine: 4,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log error` against `log h` over the finest half.
    pub fitted_order: f64,
}

fn solve_on(problem: &ConvergenceProblem, basis: TemporalBasis, grid: TimeGrid, rhs: &[f64]) -> Result<CoefficientSequence> {
    let w = compute_weights(&problem.kernel, basis, grid)?;
    march(&w, rhs)
}

/// Errors for each `N` in a dyadic list and the fitted convergence order.
pub fn converge_study(problem: &ConvergenceProblem, basis: TemporalBasis, n_list: &[usize]) -> Result<ConvergenceTable> {
    if n_list.len() < 4 {
        return Err(Error::InvalidParameter("need at least four grid sizes".into()));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter(format!("grid sizes must double: {n_list:?}")));
    }
    let reference = match &problem.reference {
        Reference::SelfConvergence { rhs, refine } => {
            if *refine < 2 {
                return Err(Error::InvalidParameter("reference refinement must be at least 2".into()));
            }
            let n_ref = refine * n_list[n_list.len() - 1];
            let grid = TimeGrid::from_horizon(problem.horizon, n_ref)?;
            let a: Vec<f64> = grid.times().map(|t| rhs(t)).collect();
            Some(solve_on(problem, basis, grid, &a)?)
        }
        Reference::Exact(_) => None,
    };
    let errors: Vec<f64> = n_list
        .par_iter()
        .map(|&n| {
            let grid = TimeGrid::from_horizon(problem.horizon, n)?;
            let lags = node_lags(basis, grid);
            match &problem.reference {
                Reference::Exact(u) => {
                    let a = manufactured_rhs(u.as_ref(), &problem.kernel, grid, RHS_TOL)?;
                    let v = solve_on(problem, basis, grid, &a)?;
                    vie_error(&v, u.as_ref(), &lags, lags[0])
                }
                Reference::SelfConvergence { rhs, .. } => {
                    let a: Vec<f64> = grid.times().map(|t| rhs(t)).collect();
                    let v = solve_on(problem, basis, grid, &a)?;
                    let fine = reference.as_ref().expect("reference run");
                    let exact = |t: f64| fine.reconstruct(t).unwrap_or(f64::NAN);
                    let e = vie_error(&v, &exact, &lags, lags[0])?;
                    if e.is_nan() {
                        return Err(Error::NonFinite("reference reconstruction".into()));
                    }
                    Ok(e)
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(n_list.len());
    for (i, (&n, &error)) in n_list.iter().zip(&errors).enumerate() {
        let h = problem.horizon / n as f64;
        let order = (i > 0 && error >= ERROR_FLOOR && errors[i - 1] >= ERROR_FLOOR).then(|| {
            let prev: &ConvergenceRow = &rows[i - 1];
            (prev.error / error).ln() / (prev.h / h).ln()
        });
        rows.push(ConvergenceRow { n, h, error, order });
    }
    let half = n_list.len().div_ceil(2);
    let fit: Vec<(f64, f64)> = rows[rows.len() - half..]
        .iter()
        .filter(|r| r.error >= ERROR_FLOOR)
        .map(|r| (r.h.ln(), r.error.ln()))
        .collect();
    let fitted_order = least_squares_slope(&fit).unwrap_or(f64::NAN);
    Ok(ConvergenceTable { rows, fitted_order })
}

/// Slope of the least-squares line through `(x, y)`; `None` with fewer than two points.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(q: Vec<f64>) -> WeightSequence {
        WeightSequence { q, basis: TemporalBasis::bspline(0).unwrap(), kernel: Kernel::Constant, dt: 1.0 }
    }

    #[test]
    fn identity_scheme() {
        let a = vec![0.0, 3.0, -1.0, 2.5];
        let v = march(&seq(vec![1.0, 0.0, 0.0, 0.0]), &a).unwrap();
        assert_eq!(v.values, a);
    }

    #[test]
    fn hand_unrolled() {
        let v = march(&seq(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]), &[0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v.values, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_leading_weight() {
        let e = march(&seq(vec![0.0, 1.0, 0.0]), &[0.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(e, Error::SingularLeadingWeight(_)));
        assert!(stability_coeffs(&seq(vec![0.0, 1.0]), 3).is_err());
    }

    #[test]
    fn nonzero_initial_rhs_rejected() {
        assert!(march(&seq(vec![1.0, 0.0]), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn alternating_stability() {
        let p = stability_coeffs(&seq(vec![1.0, 1.0]), 6).unwrap();
        assert_eq!(p.p, vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        let p = stability_coeffs(&seq(vec![1.0, 0.0, 0.0, 0.0]), 3).unwrap();
        assert_eq!(p.p, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (0..4).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((least_squares_slope(&pts).unwrap() - 2.0).abs() < 1e-14);
        assert!(least_squares_slope(&pts[..1]).is_none());
    }

    #[test]
    fn dyadic_list_required() {
        let p = ConvergenceProblem::smooth(Kernel::Constant);
        let b = TemporalBasis::bspline(1).unwrap();
        assert!(converge_study(&p, b, &[10, 20, 40]).is_err());
        assert!(converge_study(&p, b, &[10, 20, 30, 40]).is_err());
    }
}
