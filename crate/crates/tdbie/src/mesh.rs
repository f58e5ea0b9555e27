//! Triangulated surfaces, generators and OFF input/output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Result, TdbieError};

pub type Point = Vector3<f64>;

/// Smallest admissible triangle area.
pub const MIN_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    centroids: Vec<Point>,
    areas: Vec<f64>,
    radii: Vec<f64>,
}

impl SurfaceMesh {
    /// Validates indices and areas and caches per-triangle geometry.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(TdbieError::Mesh("mesh has no triangles".into()));
        }
        if let Some(v) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(TdbieError::Mesh(format!("vertex {v} is not finite")));
        }
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut radii = Vec::with_capacity(triangles.len());
        for (i, t) in triangles.iter().enumerate() {
            if let Some(&bad) = t.iter().find(|&&v| v >= vertices.len()) {
                return Err(TdbieError::Mesh(format!("triangle {i} references vertex {bad} of {}", vertices.len())));
            }
            let [a, b, c] = t.map(|v| vertices[v]);
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            if !(area > MIN_AREA) {
                return Err(TdbieError::Mesh(format!("triangle {i} is degenerate (area {area:e})")));
            }
            let g = (a + b + c) / 3.0;
            centroids.push(g);
            areas.push(area);
            radii.push([a, b, c].iter().map(|p| (p - g).norm()).fold(0.0, f64::max));
        }
        Ok(Self { vertices, triangles, centroids, areas, radii })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, i: usize) -> [Point; 3] {
        self.triangles[i].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, i: usize) -> Point {
        self.centroids[i]
    }

    pub fn area(&self, i: usize) -> f64 {
        self.areas[i]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Largest distance from the centroid to a corner.
    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d2 = 0.0f64;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                d2 = d2.max((v[i] - v[j]).norm_squared());
            }
        }
        d2.sqrt()
    }

    /// Mean over triangles of the longest edge; the mesh size `Δx`.
    pub fn mean_element_size(&self) -> f64 {
        let total: f64 = (0..self.len())
            .map(|i| {
                let [a, b, c] = self.corners(i);
                (a - b).norm().max((b - c).norm()).max((c - a).norm())
            })
            .sum();
        total / self.len() as f64
    }

    /// `[0, 1]²` in the plane `z = 0`, each of the `n × n` cells split along a diagonal.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TdbieError::InvalidParameter("square needs at least one subdivision".into()));
        }
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point::new(i as f64 * h, j as f64 * h, 0.0));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::new(vertices, triangles)
    }

    /// Icosahedron refined `subdiv` times by edge midpoints, projected to the unit sphere.
    pub fn unit_sphere(subdiv: usize) -> Result<Self> {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let mut vertices: Vec<Point> = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Point::new(x, y, z).normalize())
        .collect();
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdiv {
            let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(4 * triangles.len());
            for &[a, b, c] in &triangles {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            triangles = next;
        }
        Self::new(vertices, triangles)
    }

    /// OFF text with shortest round-trip float formatting.
    pub fn to_off(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "OFF");
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len());
        for p in &self.vertices {
            let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_off(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, msg: String| TdbieError::Parse { line, msg };

        let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty file".into()))?;
        if header != "OFF" {
            return Err(parse_err(ln, format!("expected `OFF` header, found `{header}`")));
        }
        let (ln, counts) = lines.next().ok_or_else(|| parse_err(ln, "missing counts line".into()))?;
        let counts: Vec<usize> = counts
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| parse_err(ln, format!("bad count `{w}`"))))
            .collect::<Result<_>>()?;
        if counts.len() != 3 {
            return Err(parse_err(ln, "counts line must be `V F E`".into()));
        }
        let (nv, nf) = (counts[0], counts[1]);

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "too few vertex lines".into()))?;
            let xyz: Vec<f64> = l
                .split_whitespace()
                .map(|w| w.parse().map_err(|_| parse_err(ln, format!("bad coordinate `{w}`"))))
                .collect::<Result<_>>()?;
            if xyz.len() != 3 {
                return Err(parse_err(ln, "vertex line needs three coordinates".into()));
            }
            vertices.push(Point::new(xyz[0], xyz[1], xyz[2]));
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "too few face lines".into()))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(|w| w.parse().map_err(|_| parse_err(ln, format!("bad index `{w}`"))))
                .collect::<Result<_>>()?;
            if ids.first() != Some(&3) {
                return Err(parse_err(ln, "non-triangle face".into()));
            }
            if ids.len() != 4 {
                return Err(parse_err(ln, "face line needs three indices".into()));
            }
            triangles.push([ids[1], ids[2], ids[3]]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing data after faces".into()));
        }
        Self::new(vertices, triangles)
    }

    pub fn write_off(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_off())?;
        Ok(())
    }

    pub fn read_off(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_off(&std::fs::read_to_string(path)?)
    }
}
