//! Temporal basis functions.
//!
//! All bases live in the backward (lag) variable `tau = (t_n - t) / dt >= 0`.
//! Spline bases are stored as piecewise cubics on the unit intervals
//! `[k, k+1)`, built once by running the Cox–de Boor recursion on
//! polynomials. Convolution-quadrature bases are evaluated through their
//! three-term (or four/five-term) recurrences.

use std::ops::RangeInclusive;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Largest basis index accepted by CQ evaluation.
pub const CQ_MAX_INDEX: usize = 10_000;
/// Largest lag accepted by CQ evaluation.
pub const CQ_MAX_TIME: f64 = 1_000.0;

/// Degree of an isogeometric B-spline basis, 0 to 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SplineDegree(u8);

impl SplineDegree {
    pub const MAX: usize = 3;

    pub fn new(m: usize) -> Result<Self> {
        if m > Self::MAX {
            return Err(Error::InvalidParameter(format!(
                "B-spline degree must be in 0..={}, got {m}",
                Self::MAX
            )));
        }
        Ok(Self(m as u8))
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }
}

/// Linear multistep method underlying a convolution-quadrature basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CqMethod {
    Bdf1,
    Bdf2,
    Bdf3,
    Bdf4,
    Trapezoidal,
}

impl CqMethod {
    pub const ALL: [CqMethod; 5] = [
        CqMethod::Bdf1,
        CqMethod::Bdf2,
        CqMethod::Bdf3,
        CqMethod::Bdf4,
        CqMethod::Trapezoidal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CqMethod::Bdf1 => "bdf1",
            CqMethod::Bdf2 => "bdf2",
            CqMethod::Bdf3 => "bdf3",
            CqMethod::Bdf4 => "bdf4",
            CqMethod::Trapezoidal => "trapezoidal",
        }
    }

    /// Classical order of the method.
    pub fn order(self) -> usize {
        match self {
            CqMethod::Bdf1 => 1,
            CqMethod::Bdf2 => 2,
            CqMethod::Bdf3 => 3,
            CqMethod::Bdf4 => 4,
            CqMethod::Trapezoidal => 2,
        }
    }

    /// `delta(0)`, the decay rate of `phi_0(t) = exp(-delta(0) t)`.
    pub fn delta0(self) -> f64 {
        match self {
            CqMethod::Bdf1 => 1.0,
            CqMethod::Bdf2 => 1.5,
            CqMethod::Bdf3 => 11.0 / 6.0,
            CqMethod::Bdf4 => 25.0 / 12.0,
            CqMethod::Trapezoidal => 2.0,
        }
    }

    /// The generating function `delta(xi)`.
    pub fn symbol(self, xi: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let w = one - xi;
        match self {
            CqMethod::Trapezoidal => 2.0 * w / (one + xi),
            _ => {
                let k = self.order();
                let mut acc = Complex64::new(0.0, 0.0);
                let mut pow = one;
                for i in 1..=k {
                    pow *= w;
                    acc += pow / i as f64;
                }
                acc
            }
        }
    }

    /// `delta` as a ratio of polynomials in `xi` (ascending coefficients).
    pub fn symbol_rational(self) -> (Vec<f64>, Vec<f64>) {
        match self {
            CqMethod::Bdf1 => (vec![1.0, -1.0], vec![1.0]),
            CqMethod::Bdf2 => (vec![1.5, -2.0, 0.5], vec![1.0]),
            CqMethod::Bdf3 => (vec![11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0], vec![1.0]),
            CqMethod::Bdf4 => (vec![25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25], vec![1.0]),
            CqMethod::Trapezoidal => (vec![2.0, -2.0], vec![1.0, 1.0]),
        }
    }
}

impl std::str::FromStr for CqMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bdf1" | "euler" => Ok(CqMethod::Bdf1),
            "bdf2" => Ok(CqMethod::Bdf2),
            "bdf3" => Ok(CqMethod::Bdf3),
            "bdf4" => Ok(CqMethod::Bdf4),
            "trapezoidal" | "trap" => Ok(CqMethod::Trapezoidal),
            other => Err(Error::InvalidParameter(format!("unknown CQ method `{other}`"))),
        }
    }
}

/// A temporal basis family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemporalBasis {
    /// Isogeometric B-splines of degree `m` with an `m`-fold knot at zero.
    BSplineIso(SplineDegree),
    /// Modified cubic B-splines: three boundary functions, then plain cubic translates.
    ModifiedCubic,
    /// Convolution-quadrature basis of a linear multistep method.
    Cq(CqMethod),
}

impl TemporalBasis {
    pub fn bspline(m: usize) -> Result<Self> {
        Ok(TemporalBasis::BSplineIso(SplineDegree::new(m)?))
    }

    /// Index from which `phi_j(tau) = phi_s(tau - (j - s))`; `None` for CQ bases.
    pub fn translate_start(&self) -> Option<usize> {
        match self {
            TemporalBasis::BSplineIso(m) => Some(m.get()),
            TemporalBasis::ModifiedCubic => Some(3),
            TemporalBasis::Cq(_) => None,
        }
    }

    /// Convergence order expected from the method.
    pub fn expected_order(&self) -> usize {
        match self {
            TemporalBasis::BSplineIso(m) if m.get() == 0 => 1,
            TemporalBasis::BSplineIso(_) => 2,
            TemporalBasis::ModifiedCubic => 4,
            TemporalBasis::Cq(c) => c.order(),
        }
    }

    /// Smallest lag, in steps, at which nodal errors are measured.
    pub fn min_error_lag(&self) -> usize {
        match self {
            TemporalBasis::BSplineIso(m) if m.get() >= 2 => m.get(),
            TemporalBasis::ModifiedCubic => 1,
            _ => 0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TemporalBasis::BSplineIso(m) => format!("bspline:m={}", m.get()),
            TemporalBasis::ModifiedCubic => "modcubic".into(),
            TemporalBasis::Cq(c) => format!("cq:{}", c.name()),
        }
    }

    /// Piecewise-polynomial table for spline bases.
    pub fn spline_table(&self) -> Option<&'static SplineTable> {
        match self {
            TemporalBasis::BSplineIso(m) => Some(&iso_tables()[m.get()]),
            TemporalBasis::ModifiedCubic => Some(modified_table()),
            TemporalBasis::Cq(_) => None,
        }
    }

    /// Indices `j` whose `phi_j` may be nonzero at `tau` (spline bases only).
    pub fn nonzero_range(&self, tau: f64) -> Option<RangeInclusive<usize>> {
        self.spline_table().map(|t| t.nonzero_range(tau))
    }
}

impl std::fmt::Display for TemporalBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl std::str::FromStr for TemporalBasis {
    type Err = Error;

    /// Accepts `bspline:m=K`, `modcubic`, `cq:<method>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("modcubic") || s.eq_ignore_ascii_case("modified-cubic") {
            return Ok(TemporalBasis::ModifiedCubic);
        }
        if let Some(rest) = s.strip_prefix("bspline:") {
            let m = rest
                .strip_prefix("m=")
                .ok_or_else(|| Error::InvalidParameter(format!("expected bspline:m=K, got `{s}`")))?;
            let m: usize = m
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad B-spline degree in `{s}`")))?;
            return TemporalBasis::bspline(m);
        }
        if let Some(rest) = s.strip_prefix("cq:") {
            return Ok(TemporalBasis::Cq(rest.parse()?));
        }
        Err(Error::InvalidParameter(format!("unknown basis `{s}`")))
    }
}

/// Piecewise cubic on consecutive unit intervals starting at `start`.
///
/// Piece `i` holds ascending coefficients in the local variable
/// `s = tau - (start + i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCubic {
    start: usize,
    pieces: Vec<[f64; 4]>,
}

impl PiecewiseCubic {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn pieces(&self) -> &[[f64; 4]] {
        &self.pieces
    }

    /// Half-open support `[start, end)`.
    pub fn support(&self) -> (usize, usize) {
        (self.start, self.start + self.pieces.len())
    }

    pub fn eval(&self, tau: f64) -> f64 {
        eval_pieces(self.start, &self.pieces, tau)
    }
}

fn eval_pieces(start: usize, pieces: &[[f64; 4]], tau: f64) -> f64 {
    let lo = start as f64;
    if !(tau >= lo) {
        return 0.0;
    }
    let k = tau.floor();
    let idx = (k - lo) as usize;
    match pieces.get(idx) {
        Some(c) => horner(c, tau - k),
        None => 0.0,
    }
}

#[inline]
fn horner(c: &[f64; 4], s: f64) -> f64 {
    ((c[3] * s + c[2]) * s + c[1]) * s + c[0]
}

/// Piecewise-polynomial description of a spline basis.
#[derive(Debug, Clone)]
pub struct SplineTable {
    translate_start: usize,
    boundary: Vec<PiecewiseCubic>,
    generator: PiecewiseCubic,
}

impl SplineTable {
    pub fn translate_start(&self) -> usize {
        self.translate_start
    }

    /// Start of the support and the pieces of `phi_j`.
    pub fn function(&self, j: usize) -> (usize, &[[f64; 4]]) {
        if j < self.translate_start {
            let b = &self.boundary[j];
            (b.start, &b.pieces)
        } else {
            (self.generator.start + (j - self.translate_start), &self.generator.pieces)
        }
    }

    /// Half-open support `[a, b)` of `phi_j`.
    pub fn support(&self, j: usize) -> (usize, usize) {
        let (start, pieces) = self.function(j);
        (start, start + pieces.len())
    }

    pub fn eval(&self, j: usize, tau: f64) -> f64 {
        let (start, pieces) = self.function(j);
        eval_pieces(start, pieces, tau)
    }

    /// Superset of the indices whose function is nonzero at `tau`.
    pub fn nonzero_range(&self, tau: f64) -> RangeInclusive<usize> {
        let k = if tau > 0.0 { tau.floor() as i64 } else { 0 };
        let s = self.translate_start as i64;
        let g0 = self.generator.start as i64;
        let width = self.generator.pieces.len() as i64;
        let lo = (k + s + 1 - g0 - width).max(0) as usize;
        let hi = (k + s - g0).max(0) as usize;
        lo..=hi
    }
}

/// Knot `t_i` of the isogeometric knot vector on unit spacing.
#[inline]
fn iso_knot(i: i64) -> f64 {
    i.max(0) as f64
}

type Poly = [f64; 4];

fn poly_mul_linear(p: &Poly, c0: f64, c1: f64) -> Poly {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] += c0 * p[i];
        if i + 1 < 4 {
            out[i + 1] += c1 * p[i];
        } else {
            debug_assert!(p[i] == 0.0, "degree overflow");
        }
    }
    out
}

fn poly_add(a: &Poly, b: &Poly, scale: f64) -> Poly {
    let mut out = *a;
    for i in 0..4 {
        out[i] += scale * b[i];
    }
    out
}

/// Local polynomial of `b^m_j` on `[k, k+1)` in `s = tau - k`, isogeometric knots.
fn bspline_piece(m: usize, j: i64, k: i64) -> Poly {
    if m == 0 {
        let mut p = [0.0; 4];
        if iso_knot(j) <= k as f64 && (k as f64) < iso_knot(j + 1) {
            p[0] = 1.0;
        }
        return p;
    }
    let mi = m as i64;
    let mut out = [0.0; 4];
    let d1 = iso_knot(j + mi) - iso_knot(j);
    if d1 > 0.0 {
        let lower = bspline_piece(m - 1, j, k);
        let c0 = (k as f64 - iso_knot(j)) / d1;
        out = poly_add(&out, &poly_mul_linear(&lower, c0, 1.0 / d1), 1.0);
    }
    let d2 = iso_knot(j + mi + 1) - iso_knot(j + 1);
    if d2 > 0.0 {
        let upper = bspline_piece(m - 1, j + 1, k);
        let c0 = (iso_knot(j + mi + 1) - k as f64) / d2;
        out = poly_add(&out, &poly_mul_linear(&upper, c0, -1.0 / d2), 1.0);
    }
    out
}

fn iso_table(m: usize) -> SplineTable {
    let mi = m as i64;
    let boundary = (0..m)
        .map(|j| {
            let pieces = (0..=j as i64).map(|k| bspline_piece(m, j as i64 - mi, k)).collect();
            PiecewiseCubic { start: 0, pieces }
        })
        .collect();
    let generator = PiecewiseCubic {
        start: 0,
        pieces: (0..=mi).map(|k| bspline_piece(m, 0, k)).collect(),
    };
    SplineTable { translate_start: m, boundary, generator }
}

fn iso_tables() -> &'static [SplineTable; 4] {
    static TABLES: OnceLock<[SplineTable; 4]> = OnceLock::new();
    TABLES.get_or_init(|| [iso_table(0), iso_table(1), iso_table(2), iso_table(3)])
}

fn modified_table() -> &'static SplineTable {
    static TABLE: OnceLock<SplineTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cardinal: Vec<Poly> = (0..4).map(|k| bspline_piece(3, 0, k)).collect();
        // Piece of B(tau + c) = b^3(tau + c + 2) on [k, k+1).
        let shifted = |c: i64, k: i64| -> Poly {
            let idx = k + c + 2;
            if (0..4).contains(&idx) {
                cardinal[idx as usize]
            } else {
                [0.0; 4]
            }
        };
        let combo = |n: i64, terms: &[(i64, f64)]| PiecewiseCubic {
            start: 0,
            pieces: (0..n)
                .map(|k| {
                    terms
                        .iter()
                        .fold([0.0; 4], |acc, &(c, w)| poly_add(&acc, &shifted(c, k), w))
                })
                .collect(),
        };
        let boundary = vec![
            combo(2, &[(0, 1.0), (1, 3.0)]),
            combo(3, &[(-1, 1.0), (1, -3.0)]),
            combo(4, &[(-2, 1.0), (1, 1.0)]),
        ];
        let generator = PiecewiseCubic { start: 1, pieces: cardinal };
        SplineTable { translate_start: 3, boundary, generator }
    })
}

/// Cox–de Boor evaluation of `b^m_j(t)` on the knots `t_i = dt * max(i, 0)`.
///
/// Quotients with a vanishing denominator are taken as zero.
pub fn bspline_eval(m: usize, j: i64, t: f64, dt: f64) -> Result<f64> {
    SplineDegree::new(m)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    Ok(cox_de_boor(m, j, t, dt))
}

fn cox_de_boor(m: usize, j: i64, t: f64, dt: f64) -> f64 {
    let knot = |i: i64| dt * i.max(0) as f64;
    if m == 0 {
        return if knot(j) <= t && t < knot(j + 1) { 1.0 } else { 0.0 };
    }
    let mi = m as i64;
    let mut v = 0.0;
    let d1 = knot(j + mi) - knot(j);
    if d1 > 0.0 {
        v += (t - knot(j)) / d1 * cox_de_boor(m - 1, j, t, dt);
    }
    let d2 = knot(j + mi + 1) - knot(j + 1);
    if d2 > 0.0 {
        v += (knot(j + mi + 1) - t) / d2 * cox_de_boor(m - 1, j + 1, t, dt);
    }
    v
}

/// `phi_j(tau) = b^m_{j-m}(tau)` for the isogeometric basis of degree `m`.
pub fn phi_eval(m: SplineDegree, j: usize, tau: f64) -> f64 {
    iso_tables()[m.get()].eval(j, tau)
}

/// Modified cubic basis function `phi_j(tau)`; zero for `tau < 0`.
pub fn modified_cubic_eval(j: usize, tau: f64) -> f64 {
    modified_table().eval(j, tau)
}

/// Evaluate `phi_j(tau)` for any spline basis. CQ bases are rejected.
pub fn spline_eval(basis: TemporalBasis, j: usize, tau: f64) -> Result<f64> {
    basis
        .spline_table()
        .map(|t| t.eval(j, tau))
        .ok_or_else(|| Error::InvalidParameter(format!("{basis} is not a spline basis")))
}

/// Quasi-interpolation node `t^m_j`, `j >= -m`, for `m >= 1`.
pub fn bspline_quasi_node(m: SplineDegree, j: i64, dt: f64) -> Result<f64> {
    let mi = m.get() as i64;
    if mi == 0 {
        return Err(Error::InvalidParameter("quasi-interpolation nodes need m >= 1".into()));
    }
    if j < -mi {
        return Err(Error::InvalidParameter(format!("node index {j} below -m = {}", -mi)));
    }
    Ok(if j < 0 {
        dt * ((mi + j) * (mi + j + 1)) as f64 / (2 * mi) as f64
    } else {
        dt * (j as f64 + (mi as f64 + 1.0) / 2.0)
    })
}

/// Quasi-interpolation nodes `(j, t^m_j)` for `j = -m..=n_max`.
pub fn bspline_quasi_nodes(m: SplineDegree, dt: f64, n_max: usize) -> Result<Vec<(i64, f64)>> {
    let mi = m.get() as i64;
    (-mi..=n_max as i64).map(|j| Ok((j, bspline_quasi_node(m, j, dt)?))).collect()
}

fn check_cq_envelope(j: usize, t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("CQ basis needs t >= 0, got {t}")));
    }
    if j > CQ_MAX_INDEX || t > CQ_MAX_TIME {
        return Err(Error::OutOfEnvelope { j, t, max_j: CQ_MAX_INDEX, max_t: CQ_MAX_TIME });
    }
    Ok(())
}

/// `phi_0 .. phi_j` of a CQ basis at lag `t` by the scaled recurrence.
///
/// Values carry a running log-scale so intermediate growth cannot overflow;
/// a non-finite final value is reported as an error.
pub fn cq_basis_all(method: CqMethod, j_max: usize, t: f64) -> Result<Vec<f64>> {
    check_cq_envelope(j_max, t)?;
    let mut out = Vec::with_capacity(j_max + 1);
    let mut offset = -method.delta0() * t;
    out.push(offset.exp());
    // hist[0] = psi_{j-1}, hist[1] = psi_{j-2}, ...
    let mut hist = [1.0, 0.0, 0.0, 0.0];
    for j in 1..=j_max {
        let jf = j as f64;
        let psi = match method {
            CqMethod::Bdf1 => t * hist[0] / jf,
            CqMethod::Bdf2 => t * (2.0 * hist[0] - hist[1]) / jf,
            CqMethod::Bdf3 => t * (3.0 * hist[0] - 3.0 * hist[1] + hist[2]) / jf,
            CqMethod::Bdf4 => t * (4.0 * hist[0] - 6.0 * hist[1] + 4.0 * hist[2] - hist[3]) / jf,
            CqMethod::Trapezoidal => {
                ((4.0 * t - 2.0 * (jf - 1.0)) * hist[0] - (jf - 2.0) * hist[1]) / jf
            }
        };
        if !psi.is_finite() {
            return Err(Error::NonFinite(format!("CQ recurrence at j = {j}, t = {t}")));
        }
        hist = [psi, hist[0], hist[1], hist[2]];
        let big = hist.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if big > 1e150 {
            for h in hist.iter_mut() {
                *h /= big;
            }
            offset += big.ln();
        }
        let v = hist[0] * offset.exp();
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("CQ basis value at j = {j}, t = {t}")));
        }
        out.push(v);
    }
    Ok(out)
}

/// `phi_j(t)` of a CQ basis by recurrence.
pub fn cq_basis_eval(method: CqMethod, j: usize, t: f64) -> Result<f64> {
    Ok(cq_basis_all(method, j, t)?[j])
}

fn ln_factorial(j: usize) -> f64 {
    (1..=j).map(|k| (k as f64).ln()).sum()
}

/// Closed-form `phi_j(t)` for BDF1, BDF2 and the trapezoidal rule.
pub fn cq_basis_closed_form(method: CqMethod, j: usize, t: f64) -> Result<f64> {
    check_cq_envelope(j, t)?;
    let v = match method {
        CqMethod::Bdf1 => {
            if t == 0.0 {
                if j == 0 { 1.0 } else { 0.0 }
            } else {
                (j as f64 * t.ln() - t - ln_factorial(j)).exp()
            }
        }
        CqMethod::Bdf2 => {
            if t == 0.0 {
                if j == 0 { 1.0 } else { 0.0 }
            } else {
                let x = (2.0 * t).sqrt();
                let (mut h0, mut h1) = (1.0, 2.0 * x);
                let h = if j == 0 {
                    1.0
                } else {
                    for k in 1..j {
                        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                };
                h * (0.5 * j as f64 * (0.5 * t).ln() - ln_factorial(j) - 1.5 * t).exp()
            }
        }
        CqMethod::Trapezoidal => {
            let x = 4.0 * t;
            let e = (-0.5 * x).exp();
            let mut lag = vec![1.0, 1.0 - x];
            for k in 1..j {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0 - x) * lag[k] - kf * lag[k - 1]) / (kf + 1.0);
                lag.push(next);
            }
            let lj = lag[j];
            let ljm1 = if j == 0 { 0.0 } else { lag[j - 1] };
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * e * (lj - ljm1)
        }
        CqMethod::Bdf3 | CqMethod::Bdf4 => {
            return Err(Error::InvalidParameter(format!(
                "no closed form for {} basis",
                method.name()
            )))
        }
    };
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("closed-form CQ basis at j = {j}, t = {t}")));
    }
    Ok(v)
}

/// Coefficients `v_0..v_N` of a computed solution on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    pub values: Vec<f64>,
    pub grid: TimeGrid,
    pub basis: TemporalBasis,
}

impl CoefficientSequence {
    pub fn new(values: Vec<f64>, grid: TimeGrid, basis: TemporalBasis) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.n_steps() + 1,
                values.len()
            )));
        }
        Ok(Self { values, grid, basis })
    }

    /// `U_N(t) = sum_j v_{N-j} phi_j((t_N - t) / dt)` using the final index `N`.
    pub fn reconstruct(&self, t: f64) -> Result<f64> {
        let horizon = self.grid.horizon();
        let slack = 1e-12 * horizon;
        if !(t >= -slack && t <= horizon + slack) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: horizon });
        }
        let n = self.grid.n_steps();
        let tau = ((horizon - t) / self.grid.dt()).max(0.0);
        match self.basis {
            TemporalBasis::Cq(method) => {
                let phi = cq_basis_all(method, n, tau)?;
                Ok((0..=n).map(|j| self.values[n - j] * phi[j]).sum())
            }
            _ => {
                let table = self.basis.spline_table().expect("spline basis");
                let range = table.nonzero_range(tau);
                let hi = (*range.end()).min(n);
                Ok((*range.start()..=hi)
                    .filter(|&j| j <= n)
                    .map(|j| self.values[n - j] * table.eval(j, tau))
                    .sum())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(m: usize) -> SplineDegree {
        SplineDegree::new(m).unwrap()
    }

    #[test]
    fn tables_match_cox_de_boor() {
        for m in 0..=3 {
            for j in 0..8 {
                for i in 0..=400 {
                    let tau = i as f64 * 0.0273;
                    let a = phi_eval(deg(m), j, tau);
                    let b = bspline_eval(m, j as i64 - m as i64, tau, 1.0).unwrap();
                    assert!((a - b).abs() < 1e-14, "m={m} j={j} tau={tau}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn modified_cubic_values_at_zero() {
        assert!((modified_cubic_eval(0, 0.0) - 7.0 / 6.0).abs() < 1e-15);
        assert!((modified_cubic_eval(1, 0.0) - (1.0 / 6.0 - 0.5)).abs() < 1e-15);
        assert!((modified_cubic_eval(2, 0.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(modified_cubic_eval(3, 0.0), 0.0);
        assert_eq!(modified_cubic_eval(0, -0.5), 0.0);
    }

    #[test]
    fn supports() {
        let t = TemporalBasis::ModifiedCubic.spline_table().unwrap();
        assert_eq!(t.support(0), (0, 2));
        assert_eq!(t.support(1), (0, 3));
        assert_eq!(t.support(2), (0, 4));
        assert_eq!(t.support(3), (1, 5));
        assert_eq!(t.support(7), (5, 9));
        let t = TemporalBasis::bspline(2).unwrap().spline_table().unwrap();
        assert_eq!(t.support(0), (0, 1));
        assert_eq!(t.support(1), (0, 2));
        assert_eq!(t.support(2), (0, 3));
        assert_eq!(t.support(5), (3, 6));
    }

    #[test]
    fn nonzero_range_covers_support() {
        for basis in [
            TemporalBasis::bspline(0).unwrap(),
            TemporalBasis::bspline(1).unwrap(),
            TemporalBasis::bspline(3).unwrap(),
            TemporalBasis::ModifiedCubic,
        ] {
            let table = basis.spline_table().unwrap();
            for i in 0..200 {
                let tau = i as f64 * 0.071;
                let r = table.nonzero_range(tau);
                for j in 0..40 {
                    if table.eval(j, tau) != 0.0 {
                        assert!(r.contains(&j), "{basis} tau={tau} j={j} range={r:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn quasi_nodes() {
        let n = bspline_quasi_nodes(deg(2), 1.0, 2).unwrap();
        assert_eq!(n, vec![(-2, 0.0), (-1, 0.5), (0, 1.5), (1, 2.5), (2, 3.5)]);
    }

    #[test]
    fn parse_basis() {
        assert_eq!("modcubic".parse::<TemporalBasis>().unwrap(), TemporalBasis::ModifiedCubic);
        assert_eq!("bspline:m=2".parse::<TemporalBasis>().unwrap(), TemporalBasis::bspline(2).unwrap());
        assert_eq!("cq:bdf2".parse::<TemporalBasis>().unwrap(), TemporalBasis::Cq(CqMethod::Bdf2));
        assert!("bspline:m=4".parse::<TemporalBasis>().is_err());
        assert!("spline".parse::<TemporalBasis>().is_err());
    }

    #[test]
    fn cq_envelope() {
        assert!(matches!(
            cq_basis_eval(CqMethod::Bdf2, CQ_MAX_INDEX + 1, 1.0),
            Err(Error::OutOfEnvelope { .. })
        ));
        assert!(matches!(cq_basis_eval(CqMethod::Bdf2, 3, 2000.0), Err(Error::OutOfEnvelope { .. })));
        assert!(cq_basis_eval(CqMethod::Bdf2, 3, -1.0).is_err());
    }

    #[test]
    fn cq_phi0() {
        for m in CqMethod::ALL {
            let v = cq_basis_eval(m, 0, 0.7).unwrap();
            assert!((v - (-m.delta0() * 0.7).exp()).abs() < 1e-16);
        }
    }
}
