//! Quadrature weights `q_j = ∫ K(t) φ_j(t/Δt) dt` and convolution-quadrature weights.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::basis::{CqMethod, TemporalBasis};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::Kernel;
use crate::quadrature::GaussLegendre;

/// Weights `q_0..q_N` for one kernel, basis and step.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    pub q: Vec<f64>,
    pub basis: TemporalBasis,
    pub kernel: Kernel,
    pub dt: f64,
}

impl WeightSequence {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// One past the index of the last nonzero weight.
    pub fn support_len(&self) -> usize {
        self.q.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1)
    }

    /// `q_j`, zero beyond the stored range.
    pub fn get(&self, j: usize) -> f64 {
        self.q.get(j).copied().unwrap_or(0.0)
    }
}

/// Relative agreement required between successive panel refinements.
const PANEL_TOL: f64 = 1e-13;
/// Looser bound accepted once refinement stops reducing the difference (kernel round-off floor).
const PANEL_FLOOR_TOL: f64 = 1e-11;
const MAX_PANELS: usize = 1 << 16;

fn nodes_per_interval(basis: TemporalBasis) -> usize {
    match basis {
        TemporalBasis::BSplineIso(m) => m.get() + 3,
        _ => 6,
    }
}

/// `∫_a^b K(dt (k + s)) s^p ds`, `p = 0..3`, on `panels` equal panels.
fn panel_moments(kernel: &Kernel, dt: f64, k: usize, a: f64, b: f64, panels: usize, rule: &GaussLegendre) -> ([f64; 4], f64) {
    let mut acc = [0.0; 4];
    let mut l1 = 0.0;
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { lo + width };
        for (s, w) in rule.mapped(lo, hi) {
            let kv = kernel.eval_unchecked(dt * (k as f64 + s));
            let wk = w * kv;
            l1 += (w * kv).abs();
            acc[0] += wk;
            acc[1] += wk * s;
            acc[2] += wk * s * s;
            acc[3] += wk * s * s * s;
        }
    }
    (acc, l1)
}

fn segment_moments(kernel: &Kernel, dt: f64, k: usize, a: f64, b: f64, rule: &GaussLegendre) -> Result<[f64; 4]> {
    if kernel.is_piecewise_constant() {
        return Ok(panel_moments(kernel, dt, k, a, b, 1, rule).0);
    }
    let cycles = kernel.frequency() * dt * (b - a) / std::f64::consts::PI;
    let mut panels = 1 + cycles.floor().min(MAX_PANELS as f64) as usize;
    let (mut prev, _) = panel_moments(kernel, dt, k, a, b, panels, rule);
    let mut prev_diff = f64::INFINITY;
    loop {
        let next_panels = 2 * panels;
        let (next, l1) = panel_moments(kernel, dt, k, a, b, next_panels, rule);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("kernel `{kernel}` near t = {}", dt * (k as f64 + a))));
        }
        let diff = prev.iter().zip(&next).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let scale = next.iter().fold(l1, |m, v| m.max(v.abs()));
        if diff <= PANEL_TOL * scale || scale == 0.0 {
            return Ok(next);
        }
        if diff > 0.5 * prev_diff && diff <= PANEL_FLOOR_TOL * scale {
            return Ok(next);
        }
        if next_panels >= MAX_PANELS {
            return Err(Error::QuadratureNotConverged {
                a: dt * (k as f64 + a),
                b: dt * (k as f64 + b),
                tol: PANEL_TOL,
                estimate: diff / scale,
            });
        }
        prev = next;
        prev_diff = diff;
        panels = next_panels;
    }
}

/// Moments of `K` against `1, s, s², s³` on the unit interval `[k, k+1]` in `τ`.
fn interval_moments(kernel: &Kernel, dt: f64, k: usize, jumps: &[f64], rule: &GaussLegendre) -> Result<[f64; 4]> {
    let mut cuts = vec![0.0];
    cuts.extend(jumps.iter().map(|j| j - k as f64).filter(|&s| s > 0.0 && s < 1.0));
    cuts.push(1.0);
    let mut total = [0.0; 4];
    for w in cuts.windows(2) {
        let m = segment_moments(kernel, dt, k, w[0], w[1], rule)?;
        for p in 0..4 {
            total[p] += m[p];
        }
    }
    if total.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("kernel `{kernel}` on interval {k}")));
    }
    Ok(total)
}

/// Weights of a spline basis by Gauss–Legendre quadrature on each unit knot interval.
pub fn weights_quadrature(kernel: &Kernel, basis: TemporalBasis, grid: TimeGrid) -> Result<WeightSequence> {
    let table = basis.spline_table().ok_or_else(|| {
        Error::InvalidParameter(format!("{basis} is not a spline basis; use CQ weights"))
    })?;
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut n_intervals = table.support(n).1;
    if let Some(end) = kernel.support_end() {
        n_intervals = n_intervals.min((end / dt).floor() as usize + 1);
    }
    let rule = GaussLegendre::new(nodes_per_interval(basis));
    let jumps: Vec<f64> = kernel.jumps().iter().map(|x| x / dt).collect();
    let moments: Vec<[f64; 4]> = (0..n_intervals)
        .into_par_iter()
        .map(|k| interval_moments(kernel, dt, k, &jumps, &rule))
        .collect::<Result<_>>()?;
    let q = (0..=n)
        .map(|j| {
            let (start, pieces) = table.function(j);
            let mut acc = 0.0;
            for (i, c) in pieces.iter().enumerate() {
                if let Some(mu) = moments.get(start + i) {
                    acc += c[0] * mu[0] + c[1] * mu[1] + c[2] * mu[2] + c[3] * mu[3];
                }
            }
            dt * acc
        })
        .collect();
    Ok(WeightSequence { q, basis, kernel: kernel.clone(), dt })
}

/// Exact weights of a spline basis for `K ≡ 1`.
pub fn weights_constant_closed_form(basis: TemporalBasis, grid: TimeGrid) -> Result<WeightSequence> {
    let h = grid.dt();
    let q = match basis {
        TemporalBasis::BSplineIso(m) => {
            let m = m.get();
            (0..=grid.n_steps())
                .map(|j| if j < m { h * (j + 1) as f64 / (m + 1) as f64 } else { h })
                .collect()
        }
        TemporalBasis::ModifiedCubic => (0..=grid.n_steps())
            .map(|j| match j {
                0 => 5.0 * h / 8.0,
                1 => 5.0 * h / 6.0,
                2 => 25.0 * h / 24.0,
                _ => h,
            })
            .collect(),
        TemporalBasis::Cq(_) => {
            return Err(Error::InvalidParameter("closed-form weights are for spline bases".into()))
        }
    };
    Ok(WeightSequence { q, basis, kernel: Kernel::Constant, dt: h })
}

/// Floor on the FFT length so short runs still cover the decay of the weights.
const MIN_SAMPLES: usize = 1024;

/// Contour radius for CQ weight recovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusPolicy {
    /// `L = max(4(N+1), 1024)` samples on the circle with `λ^L = ε^e`.
    Exponent(f64),
    /// Explicit radius and sample count (`samples >= N + 1`).
    Fixed { lambda: f64, samples: usize },
}

impl Default for RadiusPolicy {
    fn default() -> Self {
        RadiusPolicy::Exponent(0.8)
    }
}

impl RadiusPolicy {
    fn resolve(self, n: usize) -> Result<(f64, usize)> {
        let (lambda, samples) = match self {
            RadiusPolicy::Exponent(e) => {
                if !(e > 0.0 && e < 1.0) {
                    return Err(Error::InvalidParameter(format!("radius exponent must lie in (0, 1), got {e}")));
                }
                let samples = (4 * (n + 1)).max(MIN_SAMPLES);
                ((e * f64::EPSILON.ln() / samples as f64).exp(), samples)
            }
            RadiusPolicy::Fixed { lambda, samples } => (lambda, samples),
        };
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("contour radius must lie in (0, 1), got {lambda}")));
        }
        if samples < n + 1 {
            return Err(Error::InvalidParameter(format!("need at least {} samples, got {samples}", n + 1)));
        }
        Ok((lambda, samples))
    }
}

/// Classical CQ weights: Taylor coefficients of `K(δ(ξ)/Δt)` by FFT on a circle `|ξ| = λ`.
pub fn weights_cq(method: CqMethod, kernel: &Kernel, grid: TimeGrid, policy: RadiusPolicy) -> Result<WeightSequence> {
    let n = grid.n_steps();
    let dt = grid.dt();
    let (lambda, samples) = policy.resolve(n)?;
    let mut buf: Vec<Complex64> = (0..samples)
        .map(|k| {
            let xi = Complex64::from_polar(lambda, 2.0 * std::f64::consts::PI * k as f64 / samples as f64);
            let v = kernel.laplace_continued(method.symbol(xi) / dt)?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite(format!("transform sample at xi = {xi}")));
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    FftPlanner::new().plan_fft_forward(samples).process(&mut buf);
    let inv = 1.0 / samples as f64;
    let q: Vec<f64> = (0..=n)
        .map(|j| buf[j].re * inv * lambda.powi(-(j as i32)))
        .collect();
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("CQ weights".into()));
    }
    Ok(WeightSequence { q, basis: TemporalBasis::Cq(method), kernel: kernel.clone(), dt })
}

/// Weights for any basis: quadrature for splines, default-radius FFT for CQ.
pub fn compute_weights(kernel: &Kernel, basis: TemporalBasis, grid: TimeGrid) -> Result<WeightSequence> {
    match basis {
        TemporalBasis::Cq(m) => weights_cq(m, kernel, grid, RadiusPolicy::default()),
        _ => weights_quadrature(kernel, basis, grid),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    kernel: String,
    basis: TemporalBasis,
    dt_bits: u64,
    n_steps: usize,
}

/// Memo of weight sequences keyed by kernel, basis, step and length.
#[derive(Debug, Default)]
pub struct WeightCache {
    map: Mutex<HashMap<CacheKey, Arc<WeightSequence>>>,
}

impl WeightCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&self, kernel: &Kernel, basis: TemporalBasis, grid: TimeGrid) -> Result<Arc<WeightSequence>> {
        let kernel_key = match kernel {
            Kernel::Custom(c) => format!("{}@{:p}", c.name, Arc::as_ptr(&c.eval)),
            k => k.label(),
        };
        let key = CacheKey { kernel: kernel_key, basis, dt_bits: grid.dt().to_bits(), n_steps: grid.n_steps() };
        if let Some(w) = self.map.lock().expect("weight cache poisoned").get(&key) {
            return Ok(Arc::clone(w));
        }
        let w = Arc::new(compute_weights(kernel, basis, grid)?);
        self.map.lock().expect("weight cache poisoned").insert(key, Arc::clone(&w));
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("weight cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
