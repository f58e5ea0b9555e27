//! Retarded interaction matrices `Q^m_{jk} = ∫_{T_j} ∫_{T_k} φ_m(|x - y| / Δt) / |x - y| dy dx`.

use convspline::basis::SplineTable;
use convspline::quadrature::GaussLegendre;
use convspline::TemporalBasis;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::error::{Result, TdbieError};
use crate::mesh::{Point, SurfaceMesh};
use crate::quadrature::composite_rule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Skip pairs whose distance range cannot meet the support of `φ_m`.
    pub filter: bool,
    /// Upper bound on the number of matrices.
    pub max_matrices: usize,
    /// Gauss–Legendre points per direction for coincident pairs.
    pub duffy_points: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { filter: true, max_matrices: 4096, duffy_points: 12 }
    }
}

#[derive(Debug, Clone)]
pub struct RetardedMatrixSet {
    pub matrices: Vec<CsrMatrix<f64>>,
    pub dt: f64,
    pub basis: TemporalBasis,
}

impl RetardedMatrixSet {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    pub fn nnz(&self) -> usize {
        self.matrices.iter().map(|m| m.nnz()).sum()
    }
}

/// `M_Q + 1` with `M_Q = ⌈diam / Δt⌉ + 3`.
pub fn matrix_count(mesh: &SurfaceMesh, dt: f64) -> usize {
    (mesh.diameter() / dt).ceil() as usize + 4
}

fn table_for(basis: TemporalBasis) -> Result<&'static SplineTable> {
    basis
        .spline_table()
        .ok_or_else(|| TdbieError::InvalidParameter(format!("{basis} has no compact spline table")))
}

/// Indices `m < n_mats` whose support `Δt·supp(φ_m)` meets the pair's distance bounds.
pub fn candidate_indices(mesh: &SurfaceMesh, j: usize, k: usize, basis: TemporalBasis, dt: f64, n_mats: usize) -> Vec<usize> {
    let table = match basis.spline_table() {
        Some(t) => t,
        None => return Vec::new(),
    };
    let (dmin, dmax) = distance_bounds(mesh, j, k);
    let slack = 1e-12 * dt;
    (0..n_mats)
        .filter(|&m| {
            let (a, b) = table.support(m);
            (a as f64) * dt <= dmax + slack && (b as f64) * dt >= dmin - slack
        })
        .collect()
}

/// Conservative bounds on `|x - y|` for `x ∈ T_j`, `y ∈ T_k`.
pub fn distance_bounds(mesh: &SurfaceMesh, j: usize, k: usize) -> (f64, f64) {
    if j == k {
        return (0.0, 2.0 * mesh.radius(j));
    }
    let dc = (mesh.centroid(j) - mesh.centroid(k)).norm();
    let reach = mesh.radius(j) + mesh.radius(k);
    ((dc - reach).max(0.0), dc + reach)
}

struct PairContext<'a> {
    table: &'a SplineTable,
    dt: f64,
    n_mats: usize,
    points: &'a [Vec<Point>],
    weights: &'a [Vec<f64>],
    duffy: &'a DuffyRule,
}

impl PairContext<'_> {
    fn accumulate(&self, r: f64, w: f64, acc: &mut [f64]) {
        let tau = r / self.dt;
        for m in self.table.nonzero_range(tau) {
            if m >= self.n_mats {
                break;
            }
            acc[m] += w * self.table.eval(m, tau) / r;
        }
    }

    fn regular(&self, j: usize, k: usize, acc: &mut [f64]) {
        for (x, wx) in self.points[j].iter().zip(&self.weights[j]) {
            for (y, wy) in self.points[k].iter().zip(&self.weights[k]) {
                self.accumulate((x - y).norm(), wx * wy, acc);
            }
        }
    }

    fn coincident(&self, tri: &[Point; 3], acc: &mut [f64]) {
        // x = A + x̂_1 (B - A) + x̂_2 (C - B) on 0 <= x̂_2 <= x̂_1 <= 1; Jacobian 2|T|.
        let e1 = tri[1] - tri[0];
        let e2 = tri[2] - tri[1];
        let jac = e1.cross(&e2).norm();
        let scale = jac * jac;
        for &(d, w) in &self.duffy.samples {
            let r = (e1 * d[0] + e2 * d[1]).norm();
            self.accumulate(r, w * scale, acc);
        }
    }
}

/// Relative-coordinate samples `(x̂ - ŷ, weight)` for the coincident-pair split.
///
/// The six simplices of the identical-panel decomposition are mapped to the unit
/// 4-cube; the Jacobian `ξ³ η_1² η_2` cancels the `1/|x - y|` singularity.
struct DuffyRule {
    samples: Vec<([f64; 2], f64)>,
}

impl DuffyRule {
    fn new(n: usize) -> Self {
        let gl = GaussLegendre::new(n);
        let pts: Vec<(f64, f64)> = gl.mapped(0.0, 1.0).collect();
        let mut samples = Vec::with_capacity(6 * n.pow(4));
        for &(xi, w0) in &pts {
            for &(e1, w1) in &pts {
                for &(e2, w2) in &pts {
                    for &(e3, w3) in &pts {
                        let w = w0 * w1 * w2 * w3 * xi.powi(3) * e1 * e1 * e2;
                        for (x, y) in identical_panel_maps(xi, e1, e2, e3) {
                            samples.push(([x[0] - y[0], x[1] - y[1]], w));
                        }
                    }
                }
            }
        }
        Self { samples }
    }
}

fn identical_panel_maps(xi: f64, e1: f64, e2: f64, e3: f64) -> [([f64; 2], [f64; 2]); 6] {
    let s = |a: f64, b: f64| [xi * a, xi * b];
    [
        (s(1.0, 1.0 - e1 + e1 * e2), s(1.0 - e1 * e2 * e3, 1.0 - e1)),
        (s(1.0 - e1 * e2 * e3, 1.0 - e1), s(1.0, 1.0 - e1 + e1 * e2)),
        (s(1.0, e1 * (1.0 - e2 + e2 * e3)), s(1.0 - e1 * e2, e1 * (1.0 - e2))),
        (s(1.0 - e1 * e2, e1 * (1.0 - e2)), s(1.0, e1 * (1.0 - e2 + e2 * e3))),
        (s(1.0 - e1 * e2 * e3, e1 * (1.0 - e2 * e3)), s(1.0, e1 * (1.0 - e2))),
        (s(1.0, e1 * (1.0 - e2)), s(1.0 - e1 * e2 * e3, e1 * (1.0 - e2 * e3))),
    ]
}

fn mapped_rules(mesh: &SurfaceMesh) -> (Vec<Vec<Point>>, Vec<Vec<f64>>) {
    let rule = composite_rule();
    (0..mesh.len()).map(|i| rule.mapped(&mesh.corners(i))).unzip()
}

/// All `n_mats` entries for one element pair, computed without filtering.
pub fn pair_entries(
    mesh: &SurfaceMesh,
    j: usize,
    k: usize,
    basis: TemporalBasis,
    dt: f64,
    n_mats: usize,
    duffy_points: usize,
) -> Result<Vec<f64>> {
    let table = table_for(basis)?;
    let rule = composite_rule();
    let (pj, wj) = rule.mapped(&mesh.corners(j));
    let (pk, wk) = rule.mapped(&mesh.corners(k));
    let duffy = DuffyRule::new(duffy_points);
    let points = vec![pj, pk];
    let weights = vec![wj, wk];
    let ctx = PairContext { table, dt, n_mats, points: &points, weights: &weights, duffy: &duffy };
    let mut acc = vec![0.0; n_mats];
    if j == k {
        ctx.coincident(&mesh.corners(j), &mut acc);
    } else {
        ctx.regular(0, 1, &mut acc);
    }
    Ok(acc)
}

/// Assemble `Q^0 .. Q^{M_Q}`; rows are processed in parallel and mirrored for symmetry.
pub fn assemble_matrices(
    mesh: &SurfaceMesh,
    basis: TemporalBasis,
    dt: f64,
    opts: AssemblyOptions,
) -> Result<RetardedMatrixSet> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TdbieError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if opts.duffy_points == 0 {
        return Err(TdbieError::InvalidParameter("duffy_points must be positive".into()));
    }
    let table = table_for(basis)?;
    let n_mats = matrix_count(mesh, dt);
    if n_mats > opts.max_matrices {
        return Err(TdbieError::TooManyMatrices { needed: n_mats, cap: opts.max_matrices });
    }
    let (points, weights) = mapped_rules(mesh);
    let duffy = DuffyRule::new(opts.duffy_points);
    let ctx = PairContext { table, dt, n_mats, points: &points, weights: &weights, duffy: &duffy };
    let n = mesh.len();

    let rows: Vec<Vec<(usize, Vec<f64>)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            for k in j..n {
                if opts.filter && candidate_indices(mesh, j, k, basis, dt, n_mats).is_empty() {
                    continue;
                }
                let mut acc = vec![0.0; n_mats];
                if j == k {
                    ctx.coincident(&mesh.corners(j), &mut acc);
                } else {
                    ctx.regular(j, k, &mut acc);
                }
                out.push((k, acc));
            }
            out
        })
        .collect();

    let mut coo: Vec<CooMatrix<f64>> = (0..n_mats).map(|_| CooMatrix::new(n, n)).collect();
    for (j, row) in rows.iter().enumerate() {
        for (k, acc) in row {
            for (m, &v) in acc.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                coo[m].push(j, *k, v);
                if *k != j {
                    coo[m].push(*k, j, v);
                }
            }
        }
    }
    let matrices = coo.iter().map(CsrMatrix::from).collect();
    Ok(RetardedMatrixSet { matrices, dt, basis })
}
