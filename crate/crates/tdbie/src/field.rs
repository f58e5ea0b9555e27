//! Incident spherical pulse and right-hand-side assembly.

use rayon::prelude::*;

use crate::error::{Result, TdbieError};
use crate::mesh::{Point, SurfaceMesh};
use crate::quadrature::triangle_quadrature;

/// `a(x, t) = a0(t + t0 - |x - x_s|) / |x - x_s|` with `a0(t) = t⁴ exp(-20 (t - 1/2)²)` for `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentField {
    pub t0: f64,
    pub source: Point,
}

impl Default for IncidentField {
    fn default() -> Self {
        Self { t0: 0.0, source: Point::zeros() }
    }
}

impl IncidentField {
    pub fn new(t0: f64, source: Point) -> Self {
        Self { t0, source }
    }

    pub fn pulse(t: f64) -> f64 {
        if t > 0.0 {
            t.powi(4) * (-20.0 * (t - 0.5) * (t - 0.5)).exp()
        } else {
            0.0
        }
    }

    pub fn pulse_derivative(t: f64) -> f64 {
        if t > 0.0 {
            (4.0 * t.powi(3) - 40.0 * (t - 0.5) * t.powi(4)) * (-20.0 * (t - 0.5) * (t - 0.5)).exp()
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: Point, t: f64) -> f64 {
        let r = (x - self.source).norm();
        Self::pulse(t + self.t0 - r) / r
    }

    /// Rejects meshes where the source touches an element.
    pub fn check_mesh(&self, mesh: &SurfaceMesh) -> Result<()> {
        for i in 0..mesh.len() {
            if point_triangle_distance(self.source, &mesh.corners(i)) <= 1e-12 {
                return Err(TdbieError::SourceOnSurface(i));
            }
        }
        Ok(())
    }
}

/// `a_j^n = ∫_{T_j} a(x, t_n) dx` for every element.
pub fn assemble_rhs(mesh: &SurfaceMesh, field: &IncidentField, t: f64) -> Result<Vec<f64>> {
    field.check_mesh(mesh)?;
    Ok(rhs_unchecked(mesh, field, t))
}

pub(crate) fn rhs_unchecked(mesh: &SurfaceMesh, field: &IncidentField, t: f64) -> Vec<f64> {
    (0..mesh.len())
        .into_par_iter()
        .map(|i| triangle_quadrature(&mesh.corners(i), |x| field.eval(x, t)))
        .collect()
}

/// Uniform density on the unit sphere for a source at its centre.
///
/// The single-layer operator on a uniform density reduces to `½ ∫_0^2 u(t - ρ) dρ`,
/// so `u(t) = 2 Σ_{k>=0} a'(t - 2k)` with `a(t) = a0(t + t0 - 1)`.
pub fn sphere_exact_density(t0: f64, t: f64) -> f64 {
    let mut sum = 0.0;
    let mut s = t + t0 - 1.0;
    while s > 0.0 {
        sum += IncidentField::pulse_derivative(s);
        s -= 2.0;
    }
    2.0 * sum
}

fn point_triangle_distance(p: Point, tri: &[Point; 3]) -> f64 {
    let [a, b, c] = *tri;
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    (p - (a + ab * v + ac * w)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_is_causal_and_derivative_matches() {
        assert_eq!(IncidentField::pulse(0.0), 0.0);
        assert_eq!(IncidentField::pulse(-1.0), 0.0);
        for t in [0.2, 0.5, 0.77, 1.3] {
            let h = 1e-6;
            let fd = (IncidentField::pulse(t + h) - IncidentField::pulse(t - h)) / (2.0 * h);
            assert!((fd - IncidentField::pulse_derivative(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn source_on_plate_is_rejected() {
        let mesh = SurfaceMesh::unit_square(2).unwrap();
        assert!(matches!(assemble_rhs(&mesh, &IncidentField::default(), 1.0), Err(TdbieError::SourceOnSurface(_))));
        let above = IncidentField::new(0.0, Point::new(0.5, 0.5, 1.0));
        assert!(assemble_rhs(&mesh, &above, 1.0).is_ok());
    }

    #[test]
    fn distance_to_triangle() {
        let tri = [Point::zeros(), Point::x(), Point::y()];
        assert!((point_triangle_distance(Point::new(0.2, 0.2, 3.0), &tri) - 3.0).abs() < 1e-15);
        assert!((point_triangle_distance(Point::new(-1.0, 0.0, 0.0), &tri) - 1.0).abs() < 1e-15);
        assert!((point_triangle_distance(Point::new(1.0, 1.0, 0.0), &tri) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
