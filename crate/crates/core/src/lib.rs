//! Time stepping for convolution Volterra integral equations
//! `∫_0^t K(t') u(t - t') dt' = a(t)` with convolution-spline and
//! convolution-quadrature bases, plus stability analysis tools.

pub mod basis;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod quadrature;
pub mod stability;
pub mod vie;
pub mod weights;

pub use basis::{CoefficientSequence, CqMethod, SplineDegree, TemporalBasis};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use kernels::Kernel;
pub use weights::{RadiusPolicy, WeightSequence};
