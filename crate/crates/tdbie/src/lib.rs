//! Time-domain boundary integral solver for the single-layer retarded potential
//! equation on triangulated surfaces.
//!
//! Space uses piecewise constants on triangles (Galerkin); time uses the
//! convolution-spline bases of [`convspline`], modified cubics by default.

pub mod assembly;
pub mod error;
pub mod field;
pub mod mesh;
pub mod quadrature;
pub mod solver;

pub use assembly::{assemble_matrices, AssemblyOptions, RetardedMatrixSet};
pub use error::{Result, TdbieError};
pub use field::{assemble_rhs, sphere_exact_density, IncidentField};
pub use mesh::{Point, SurfaceMesh};
pub use solver::{solution_norms, time_march, time_march_on, NormRow, TdbieSolution};

use convspline::TemporalBasis;

/// Default `Δt / Δx`.
pub const DEFAULT_MESH_RATIO: f64 = 0.5;

/// Everything needed for one scattering run on a given mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub dt: f64,
    pub t_end: f64,
    pub basis: TemporalBasis,
    pub field: IncidentField,
    pub assembly: AssemblyOptions,
}

impl RunSpec {
    /// Modified cubic run with `Δt = ratio · Δx`.
    pub fn with_ratio(mesh: &SurfaceMesh, ratio: f64, t_end: f64) -> Self {
        Self {
            dt: ratio * mesh.mean_element_size(),
            t_end,
            basis: TemporalBasis::ModifiedCubic,
            field: IncidentField::default(),
            assembly: AssemblyOptions::default(),
        }
    }

    /// Smallest step count whose grid reaches `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Assemble, then march to `t_end`.
pub fn run(mesh: &SurfaceMesh, spec: &RunSpec) -> Result<(RetardedMatrixSet, TdbieSolution)> {
    if !(spec.t_end > 0.0) {
        return Err(TdbieError::InvalidParameter(format!("t_end must be positive, got {}", spec.t_end)));
    }
    spec.field.check_mesh(mesh)?;
    let matrices = assemble_matrices(mesh, spec.basis, spec.dt, spec.assembly)?;
    let dt = spec.dt;
    let sol = time_march_on(mesh, &matrices, |n| Ok(field::rhs_unchecked(mesh, &spec.field, n as f64 * dt)), spec.n_steps())?;
    Ok((matrices, sol))
}
