//! Triangle rules: a 6-point degree-4 rule applied on a 4 × 4 subdivision.

use std::sync::OnceLock;

use crate::mesh::Point;

/// Symmetric 6-point rule, exact to degree 4: barycentric orbits and weights (sum 1).
const ORBITS: [(f64, f64, f64); 2] = [
    (0.445_948_490_915_964_886, 0.108_103_018_168_070_227, 0.223_381_589_678_011_466),
    (0.091_576_213_509_770_743, 0.816_847_572_980_458_513, 0.109_951_743_655_321_867),
];

/// Subdivisions per edge of the composite rule.
pub const SUBDIV: usize = 4;

/// Barycentric points `(λ_1, λ_2)` and weights summing to one.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// The plain 6-point rule.
    pub fn base() -> Self {
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for &(a, b, w) in &ORBITS {
            for p in [[a, a], [a, b], [b, a]] {
                points.push(p);
                weights.push(w);
            }
        }
        Self { points, weights }
    }

    /// The base rule on each of the `n²` congruent sub-triangles.
    pub fn composite(n: usize) -> Self {
        let base = Self::base();
        let h = 1.0 / n as f64;
        let w_sub = 1.0 / (n * n) as f64;
        let mut points = Vec::with_capacity(6 * n * n);
        let mut weights = Vec::with_capacity(6 * n * n);
        let mut push = |v: [[f64; 2]; 3]| {
            for (p, &w) in base.points.iter().zip(&base.weights) {
                let l3 = 1.0 - p[0] - p[1];
                let x = p[0] * v[0][0] + p[1] * v[1][0] + l3 * v[2][0];
                let y = p[0] * v[0][1] + p[1] * v[1][1] + l3 * v[2][1];
                points.push([x, y]);
                weights.push(w * w_sub);
            }
        };
        // Sub-triangles in (u, v) = (λ_2, λ_3) coordinates of the unit simplex.
        for j in 0..n {
            for i in 0..(n - j) {
                let (u, v) = (i as f64 * h, j as f64 * h);
                push([[u, v], [u + h, v], [u, v + h]]);
                if i + j + 1 < n {
                    push([[u + h, v], [u + h, v + h], [u, v + h]]);
                }
            }
        }
        // Convert (u, v) to (λ_1, λ_2) = (1 - u - v, u).
        for p in &mut points {
            *p = [1.0 - p[0] - p[1], p[0]];
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical points and weights on the triangle `[a, b, c]`.
    pub fn mapped(&self, tri: &[Point; 3]) -> (Vec<Point>, Vec<f64>) {
        let area = 0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
        let pts = self
            .points
            .iter()
            .map(|p| tri[0] * p[0] + tri[1] * p[1] + tri[2] * (1.0 - p[0] - p[1]))
            .collect();
        let w = self.weights.iter().map(|w| w * area).collect();
        (pts, w)
    }
}

/// The 16-sub-triangle composite rule, built once.
pub fn composite_rule() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| TriangleRule::composite(SUBDIV))
}

/// `∫_T f` with the composite rule.
pub fn triangle_quadrature<F: FnMut(Point) -> f64>(tri: &[Point; 3], mut f: F) -> f64 {
    let (pts, w) = composite_rule().mapped(tri);
    pts.into_iter().zip(w).map(|(p, w)| w * f(p)).sum()
}
