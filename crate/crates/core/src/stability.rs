//! Stability analysis: rational Z-transforms and the root condition,
//! impulse-response scans for oscillatory kernels, and step-kernel checks.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::TemporalBasis;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::Kernel;
use crate::vie::stability_coeffs;
use crate::weights::{compute_weights, weights_quadrature};

/// Step count used by scans, matching the experiments being reproduced.
pub const SCAN_STEPS: usize = 2500;
/// A scan value above this counts as unbounded growth.
pub const UNBOUNDED_THRESHOLD: f64 = 1e3;
pub const MAX_SCAN_OMEGA_DT: f64 = 20.0 * std::f64::consts::PI;

/// `Q(ξ) = N(ξ) / D(ξ)` with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalZ {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl RationalZ {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        if denominator.first().copied().unwrap_or(0.0) == 0.0 {
            return Err(Error::InvalidParameter("denominator must be nonzero at xi = 0".into()));
        }
        if numerator.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidParameter("numerator is identically zero".into()));
        }
        Ok(Self { numerator, denominator })
    }

    pub fn eval(&self, xi: Complex64) -> Complex64 {
        poly_eval(&self.numerator, xi) / poly_eval(&self.denominator, xi)
    }
}

pub fn poly_eval(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Roots of `Σ c_k x^k` as companion-matrix eigenvalues.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let top = match coeffs.iter().rposition(|&c| c != 0.0) {
        Some(i) => i,
        None => return Err(Error::InvalidParameter("zero polynomial has no root set".into())),
    };
    let low = coeffs.iter().position(|&c| c != 0.0).expect("nonzero coefficient");
    let mut roots = vec![Complex64::new(0.0, 0.0); low];
    let c = &coeffs[low..=top];
    let d = c.len() - 1;
    if d == 0 {
        return Ok(roots);
    }
    let lead = c[d];
    let mut comp = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -c[i] / lead;
    }
    let schur = Schur::try_new(comp, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NonFinite("companion matrix eigenvalues did not converge".into()))?;
    roots.extend(schur.complex_eigenvalues().iter().copied());
    Ok(roots)
}

/// Roots within `tol` of each other, merged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCluster {
    pub center: Complex64,
    pub modulus: f64,
    pub multiplicity: usize,
}

pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<RootCluster> {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (roots[i] - roots[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut out: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match out.iter_mut().find(|c| c.0 == r) {
            Some(c) => {
                c.1 += roots[i];
                c.2 += 1;
            }
            None => out.push((r, roots[i], 1)),
        }
    }
    out.into_iter()
        .map(|(_, sum, k)| {
            let center = sum / k as f64;
            RootCluster { center, modulus: center.norm(), multiplicity: k }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
}

/// Evidence behind a verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A numerator root inside the disc `|ξ| < ρ`, or a repeated root in the annulus.
    Root(RootCluster),
    /// Measured impulse-response growth.
    Growth { max_abs_pn: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub classification: Classification,
    /// Numerator roots after cancelling poles, clustered.
    pub roots: Vec<RootCluster>,
    /// `ρ = 1 / (1 + c Δt)`.
    pub threshold: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConditionOptions {
    /// Margin constant `c` in `ρ = 1 / (1 + c Δt)`.
    pub c: f64,
    pub cluster_tol: f64,
}

impl Default for RootConditionOptions {
    fn default() -> Self {
        Self { c: 10.0, cluster_tol: 1e-7 }
    }
}

/// Root condition: all numerator roots satisfy `|ξ| >= ρ`, and those with `|ξ| <= 1` are simple.
pub fn root_condition_check(q: &RationalZ, dt: f64, opts: RootConditionOptions) -> Result<StabilityVerdict> {
    if !(dt > 0.0) || !(opts.c >= 0.0) || !(opts.cluster_tol >= 0.0) {
        return Err(Error::InvalidParameter("need dt > 0, c >= 0 and cluster_tol >= 0".into()));
    }
    let tol = opts.cluster_tol;
    let rho = 1.0 / (1.0 + opts.c * dt);
    let mut clusters = cluster_roots(&polynomial_roots(&q.numerator)?, tol);
    let poles = if q.denominator.len() > 1 {
        cluster_roots(&polynomial_roots(&q.denominator)?, tol)
    } else {
        Vec::new()
    };
    for pole in &poles {
        if let Some(z) = clusters.iter_mut().find(|z| (z.center - pole.center).norm() <= tol) {
            z.multiplicity = z.multiplicity.saturating_sub(pole.multiplicity);
        }
    }
    clusters.retain(|z| z.multiplicity > 0);
    clusters.sort_by(|a, b| a.modulus.total_cmp(&b.modulus).then(a.center.arg().total_cmp(&b.center.arg())));

    let mut classification = Classification::Stable;
    let mut witness = None;
    for z in &clusters {
        let inside = z.modulus < rho - tol;
        let repeated = z.multiplicity >= 2 && z.modulus >= rho - tol && z.modulus <= 1.0 + tol;
        if inside || repeated {
            classification = Classification::Unstable;
            witness = Some(Witness::Root(*z));
            break;
        }
        if (z.modulus - rho).abs() <= tol && classification == Classification::Stable {
            classification = Classification::Marginal;
            witness = Some(Witness::Root(*z));
        }
    }
    Ok(StabilityVerdict { classification, roots: clusters, threshold: rho, witness })
}

/// Trim trailing coefficients that are zero up to round-off.
fn trim(mut c: Vec<f64>) -> Vec<f64> {
    let big = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while c.len() > 1 && c.last().is_some_and(|v| v.abs() <= 1e-14 * big) {
        c.pop();
    }
    c
}

/// Z-transform of the weights for the constant and step kernels.
pub fn rational_q(basis: TemporalBasis, kernel: &Kernel, grid: TimeGrid) -> Result<RationalZ> {
    let h = grid.dt();
    match (kernel, basis) {
        (Kernel::Constant, TemporalBasis::BSplineIso(m)) => {
            let m = m.get();
            RationalZ::new(vec![h / (m + 1) as f64; m + 1], vec![1.0, -1.0])
        }
        (Kernel::Constant, TemporalBasis::ModifiedCubic) => RationalZ::new(
            [15.0, 5.0, 5.0, -1.0].iter().map(|c| c * h / 24.0).collect(),
            vec![1.0, -1.0],
        ),
        (Kernel::Constant, TemporalBasis::Cq(method)) => {
            let (num, den) = method.symbol_rational();
            RationalZ::new(den.iter().map(|c| c * h).collect(), num)
        }
        (Kernel::Step { l }, TemporalBasis::BSplineIso(_) | TemporalBasis::ModifiedCubic) => {
            let s = basis.translate_start().expect("spline basis");
            let n = (l / h).ceil() as usize + s + 4;
            let w = weights_quadrature(kernel, basis, grid.with_steps(n)?)?;
            RationalZ::new(trim(w.q), vec![1.0])
        }
        _ => Err(Error::NotRational(format!("{kernel} with {basis}"))),
    }
}

/// Oscillatory kernel families used in frequency scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillatoryFamily {
    Cosine,
    BesselJ0,
}

impl OscillatoryFamily {
    pub fn kernel(self, omega: f64) -> Result<Kernel> {
        match self {
            OscillatoryFamily::Cosine => Kernel::cosine(omega),
            OscillatoryFamily::BesselJ0 => Kernel::bessel_j0(omega),
        }
    }
}

impl std::str::FromStr for OscillatoryFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos" | "cosine" => Ok(OscillatoryFamily::Cosine),
            "j0" | "bessel" => Ok(OscillatoryFamily::BesselJ0),
            _ => Err(Error::InvalidParameter(format!("unknown kernel family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub omega_dt: f64,
    /// `max_{n <= n_max} |p_n|`; `+∞` on overflow.
    pub max_abs_pn: f64,
}

/// `max |p_n|` at one frequency `ωΔt`.
pub fn pn_max_at(basis: TemporalBasis, family: OscillatoryFamily, omega_dt: f64, n_max: usize, dt: f64) -> Result<f64> {
    if !(0.0..=MAX_SCAN_OMEGA_DT).contains(&omega_dt) {
        return Err(Error::InvalidParameter(format!("omega*dt must lie in [0, 20 pi], got {omega_dt}")));
    }
    let grid = TimeGrid::new(dt, n_max.max(1))?;
    let kernel = family.kernel(omega_dt / dt)?;
    let w = compute_weights(&kernel, basis, grid)?;
    Ok(stability_coeffs(&w, n_max)?.max_abs())
}

/// Scan `max |p_n|` over a grid of `ωΔt` values; frequencies run in parallel.
pub fn pn_scan(
    basis: TemporalBasis,
    family: OscillatoryFamily,
    omega_dt: &[f64],
    n_max: usize,
    dt: f64,
) -> Result<Vec<ScanPoint>> {
    omega_dt
        .par_iter()
        .map(|&th| Ok(ScanPoint { omega_dt: th, max_abs_pn: pn_max_at(basis, family, th, n_max, dt)? }))
        .collect()
}

/// Bisection for the `ωΔt` where scans switch from bounded to unbounded.
///
/// Requires bounded at `lo` and unbounded at `hi`.
pub fn locate_transition(
    basis: TemporalBasis,
    family: OscillatoryFamily,
    mut lo: f64,
    mut hi: f64,
    n_max: usize,
    tol: f64,
) -> Result<f64> {
    let unbounded = |th: f64| -> Result<bool> { Ok(pn_max_at(basis, family, th, n_max, 1.0)? > UNBOUNDED_THRESHOLD) };
    if unbounded(lo)? || !unbounded(hi)? {
        return Err(Error::InvalidParameter(format!("[{lo}, {hi}] does not bracket a transition")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if unbounded(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed form of `p_n` for the step kernel and linear splines, `M + 2 <= n <= 2M - 1`.
pub fn step_m1_pn_reference(m: usize, r: f64, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("r must lie in [0, 1), got {r}")));
    }
    if m < 3 || n < m + 2 || n > 2 * m - 1 {
        return Err(Error::InvalidParameter(format!("n = {n} outside [M + 2, 2M - 1] for M = {m}")));
    }
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let lin = 2.0 - 4.0 * r * r - 8.0 * r * (1.0 - r) * (n - m) as f64;
    Ok(2.0 * sign(n) + sign(n + m) * lin)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub p: Vec<f64>,
    pub max_abs_pn: f64,
    /// Running maximum of `|p_n|` at the end of each window of length `L`.
    pub period_maxima: Vec<f64>,
    /// Largest ratio of consecutive period maxima.
    pub growth_factor: f64,
}

/// Impulse response of the modified cubic scheme for the step kernel `K = 1_{[0, L]}` up to `T`.
pub fn step_modified_growth_check(l: f64, horizon: f64, dt: f64) -> Result<GrowthReport> {
    if !(dt > 0.0 && l > 5.0 * dt && horizon >= l) {
        return Err(Error::InvalidParameter(format!("need L > 5 dt and T >= L (L = {l}, T = {horizon}, dt = {dt})")));
    }
    let n_max = (horizon / dt).round() as usize;
    let grid = TimeGrid::new(dt, n_max)?;
    let w = weights_quadrature(&Kernel::step(l)?, TemporalBasis::ModifiedCubic, grid)?;
    let p = stability_coeffs(&w, n_max)?.p;
    let window = (l / dt).round().max(1.0) as usize;
    let mut running = 0.0f64;
    let cumulative: Vec<f64> = p
        .iter()
        .map(|v| {
            running = running.max(if v.is_finite() { v.abs() } else { f64::INFINITY });
            running
        })
        .collect();
    let period_maxima: Vec<f64> =
        (1..=n_max.div_ceil(window)).map(|k| cumulative[(k * window).min(n_max)]).collect();
    let growth_factor = period_maxima.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max);
    Ok(GrowthReport { max_abs_pn: running, p, period_maxima, growth_factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_simple_polynomials() {
        let mut r = polynomial_roots(&[-2.0, 1.0]).unwrap();
        assert!((r[0] - c(2.0, 0.0)).norm() < 1e-14);
        r = polynomial_roots(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.len(), 2);
        r = polynomial_roots(&[1.0, 0.0, 1.0]).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-14 && (r[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(polynomial_roots(&[5.0]).unwrap().is_empty());
    }

    #[test]
    fn root_inside_is_unstable() {
        let q = RationalZ::new(vec![1.0, -2.0], vec![1.0]).unwrap();
        let v = root_condition_check(&q, 0.01, RootConditionOptions::default()).unwrap();
        assert_eq!(v.classification, Classification::Unstable);
        assert!(matches!(v.witness, Some(Witness::Root(z)) if (z.modulus - 0.5).abs() < 1e-14));
    }

    #[test]
    fn double_root_on_circle_is_unstable() {
        let q = RationalZ::new(vec![1.0, -2.0, 1.0], vec![1.0]).unwrap();
        let v = root_condition_check(&q, 0.01, RootConditionOptions::default()).unwrap();
        assert_eq!(v.classification, Classification::Unstable);
    }

    #[test]
    fn degree_zero_is_stable() {
        let q = RationalZ::new(vec![3.0], vec![1.0, -1.0]).unwrap();
        let v = root_condition_check(&q, 0.1, RootConditionOptions::default()).unwrap();
        assert_eq!(v.classification, Classification::Stable);
        assert!(v.roots.is_empty());
    }

    #[test]
    fn marginal_at_threshold() {
        let dt = 0.1;
        let rho = 1.0 / (1.0 + 10.0 * dt);
        let q = RationalZ::new(vec![-rho, 1.0], vec![1.0]).unwrap();
        let v = root_condition_check(&q, dt, RootConditionOptions::default()).unwrap();
        assert_eq!(v.classification, Classification::Marginal);
    }

    #[test]
    fn pole_cancellation() {
        let q = RationalZ::new(vec![1.0, -2.0, 1.0], vec![1.0, -1.0]).unwrap();
        let v = root_condition_check(&q, 0.01, RootConditionOptions::default()).unwrap();
        assert_eq!(v.classification, Classification::Stable);
        assert_eq!(v.roots.len(), 1);
        assert_eq!(v.roots[0].multiplicity, 1);
    }

    #[test]
    fn rational_q_rejects_oscillatory_kernels() {
        let g = TimeGrid::new(0.1, 10).unwrap();
        let e = rational_q(TemporalBasis::ModifiedCubic, &Kernel::cosine(1.0).unwrap(), g).unwrap_err();
        assert!(matches!(e, Error::NotRational(_)));
    }

    #[test]
    fn reference_formula_domain() {
        assert!(step_m1_pn_reference(20, 0.5, 21).is_err());
        assert!(step_m1_pn_reference(20, 0.5, 40).is_err());
        assert!(step_m1_pn_reference(20, 1.0, 25).is_err());
        assert_eq!(step_m1_pn_reference(20, 0.0, 22).unwrap(), 4.0);
    }

    #[test]
    fn scan_rejects_out_of_range_frequency() {
        let b = TemporalBasis::bspline(0).unwrap();
        assert!(pn_scan(b, OscillatoryFamily::Cosine, &[70.0], 10, 1.0).is_err());
    }
}
