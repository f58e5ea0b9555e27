//! Marching on in time: `Q^0 U^n = 4π a^n - Σ_{m>=1} Q^m U^{n-m}`.

use std::io::Write;
use std::path::Path;

use convspline::basis::CoefficientSequence;
use convspline::TimeGrid;
use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

use crate::assembly::RetardedMatrixSet;
use crate::error::{Result, TdbieError};
use crate::mesh::SurfaceMesh;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Element densities `U^n_k` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TdbieSolution {
    pub u: Vec<Vec<f64>>,
    pub grid: TimeGrid,
    pub areas: Vec<f64>,
}

impl TdbieSolution {
    pub fn n_elements(&self) -> usize {
        self.areas.len()
    }

    /// Time coefficients of element `k` as a reconstructible sequence.
    pub fn element_series(&self, k: usize, matrices: &RetardedMatrixSet) -> Result<CoefficientSequence> {
        let values = self.u.iter().map(|row| row[k]).collect();
        Ok(CoefficientSequence::new(values, self.grid, matrices.basis)?)
    }

    /// Largest `|U^n_k|` over all steps and elements.
    pub fn max_abs(&self) -> f64 {
        self.u.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Header `N_S`, `n_steps` as little-endian `u64`, then `n_steps + 1` rows of `N_S` doubles.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(&(self.n_elements() as u64).to_le_bytes())?;
        out.write_all(&(self.grid.n_steps() as u64).to_le_bytes())?;
        for row in &self.u {
            for v in row {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn csr_matvec_sub(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    for (i, row) in a.row_iter().enumerate() {
        let mut s = 0.0;
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            s += v * x[c];
        }
        y[i] -= s;
    }
}

/// March `n_steps` steps with `U^0 = 0`; `rhs(n)` returns `a^n` (the field must vanish at `n = 0`).
pub fn time_march<F>(matrices: &RetardedMatrixSet, mut rhs: F, n_steps: usize) -> Result<TdbieSolution>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    let q0 = matrices.matrices.first().ok_or_else(|| TdbieError::InvalidParameter("no matrices".into()))?;
    let n = q0.nrows();
    let mut dense = DMatrix::<f64>::zeros(n, n);
    for (i, j, &v) in q0.triplet_iter() {
        dense[(i, j)] = v;
    }
    let lu = dense.clone().lu();
    let diag = lu.u().diagonal();
    let (dmin, dmax) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    if !(dmin > 1e-14 * dmax) {
        return Err(TdbieError::Factorization(format!("pivot ratio {:e}", dmin / dmax)));
    }

    let a0 = rhs(0)?;
    if a0.iter().any(|&v| v != 0.0) {
        return Err(TdbieError::InvalidParameter("incident field must vanish at t = 0".into()));
    }
    let mut u: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for step in 1..=n_steps {
        let a = rhs(step)?;
        if a.len() != n {
            return Err(TdbieError::InvalidParameter(format!("rhs has {} entries, expected {n}", a.len())));
        }
        let mut b: Vec<f64> = a.iter().map(|v| FOUR_PI * v).collect();
        for m in 1..matrices.len().min(step + 1) {
            csr_matvec_sub(&matrices.matrices[m], &u[step - m], &mut b);
        }
        let x = lu
            .solve(&nalgebra::DVector::from_vec(b))
            .ok_or_else(|| TdbieError::Factorization("singular leading matrix".into()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(TdbieError::NonFinite(step));
        }
        u.push(x.as_slice().to_vec());
    }
    let grid = TimeGrid::new(matrices.dt, n_steps)?;
    Ok(TdbieSolution { u, grid, areas: Vec::new() })
}

/// `time_march` with element areas attached for norms.
pub fn time_march_on<F>(mesh: &SurfaceMesh, matrices: &RetardedMatrixSet, rhs: F, n_steps: usize) -> Result<TdbieSolution>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    if matrices.dim() != mesh.len() {
        return Err(TdbieError::InvalidParameter("matrices do not match the mesh".into()));
    }
    let mut sol = time_march(matrices, rhs, n_steps)?;
    sol.areas = mesh.areas().to_vec();
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub n: usize,
    pub t: f64,
    /// `max_k |U^n_k|`, the density at element midpoints.
    pub linf_mid: f64,
    /// `Σ_k |U^n_k| |T_k|`.
    pub l1: f64,
}

pub fn solution_norms(sol: &TdbieSolution) -> Vec<NormRow> {
    sol.u
        .iter()
        .enumerate()
        .map(|(n, row)| NormRow {
            n,
            t: sol.grid.time(n),
            linf_mid: row.iter().fold(0.0, |m, v| m.max(v.abs())),
            l1: row.iter().zip(&sol.areas).map(|(v, a)| v.abs() * a).sum(),
        })
        .collect()
}
