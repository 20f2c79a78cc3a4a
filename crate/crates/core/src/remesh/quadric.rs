//! Quadric error metrics for edge-collapse simplification.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{face_normal_area, TriMesh};

/// Symmetric 4x4 form accumulating area-weighted squared point-plane
/// distances. Stored as the ten unique upper-triangle entries:
///
/// ```text
/// | a b c d |
/// | b e f g |
/// | c f h i |
/// | d g i j |
/// ```
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Quadric {
    m: [f64; 10],
}

impl Quadric {
    /// Quadric of the plane `n . x + d = 0` (unit `n`), scaled by `weight`.
    pub fn from_plane(n: Vector3<f64>, d: f64, weight: f64) -> Self {
        let (a, b, c) = (n.x, n.y, n.z);
        Quadric {
            m: [
                weight * a * a,
                weight * a * b,
                weight * a * c,
                weight * a * d,
                weight * b * b,
                weight * b * c,
                weight * b * d,
                weight * c * c,
                weight * c * d,
                weight * d * d,
            ],
        }
    }

    pub fn add(&self, other: &Quadric) -> Quadric {
        let mut m = self.m;
        for (x, y) in m.iter_mut().zip(other.m.iter()) {
            *x += y;
        }
        Quadric { m }
    }

    /// Evaluates `v^T Q v` at homogeneous `(p, 1)`.
    pub fn eval(&self, p: &Point3<f64>) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        let m = &self.m;
        m[0] * x * x
            + 2.0 * m[1] * x * y
            + 2.0 * m[2] * x * z
            + 2.0 * m[3] * x
            + m[4] * y * y
            + 2.0 * m[5] * y * z
            + 2.0 * m[6] * y
            + m[7] * z * z
            + 2.0 * m[8] * z
            + m[9]
    }

    /// Minimizer of the quadric, or `None` when the 3x3 system is singular
    /// (|det| < 1e-12).
    pub fn optimal_point(&self) -> Option<Point3<f64>> {
        let m = &self.m;
        let a = Matrix3::new(m[0], m[1], m[2], m[1], m[4], m[5], m[2], m[5], m[7]);
        let b = Vector3::new(m[3], m[6], m[8]);
        let det = a.determinant();
        if det.abs() < 1e-12 {
            return None;
        }
        a.try_inverse().map(|inv| Point3::from(inv * (-b)))
    }
}

/// Per-vertex quadrics: each vertex accumulates the area-weighted plane
/// quadrics of its incident faces.
pub fn compute_vertex_quadrics(mesh: &TriMesh) -> Result<Vec<Quadric>> {
    let mut quadrics = vec![Quadric::default(); mesh.vertex_count()];
    for (fi, face) in mesh.faces.iter().enumerate() {
        let (n, area) = face_normal_area(mesh, fi);
        if area <= 1e-20 {
            return Err(Error::ZeroAreaFace { face: fi });
        }
        let d = -n.dot(&mesh.vertices[face[0] as usize].coords);
        let q = Quadric::from_plane(n, d, area);
        for &v in face {
            quadrics[v as usize] = quadrics[v as usize].add(&q);
        }
    }
    Ok(quadrics)
}

/// Cost and placement for collapsing `edge`: the QEM error at the optimal
/// position (edge midpoint when the quadric system is singular) plus
/// `lambda_edge` times the squared edge length.
pub fn collapse_cost(
    mesh: &TriMesh,
    quadrics: &[Quadric],
    edge: (u32, u32),
    lambda_edge: f64,
) -> (f64, Point3<f64>) {
    let (u, v) = edge;
    let q = quadrics[u as usize].add(&quadrics[v as usize]);
    let pu = mesh.vertices[u as usize];
    let pv = mesh.vertices[v as usize];
    let position = q
        .optimal_point()
        .unwrap_or_else(|| nalgebra::center(&pu, &pv));
    let length2 = (pu - pv).norm_squared();
    (q.eval(&position) + lambda_edge * length2, position)
}
