//! Synthetic meshes and deforming sequences used by the bundled
//! experiments and the test suite: icosahedra/icospheres, open cylinders
//! bent along an analytic arc, and torus segments.

use std::f64::consts::PI;

use nalgebra::Point3;

use crate::mesh::TriMesh;
use crate::remesh;

/// Regular icosahedron with circumradius 1.
pub fn icosahedron() -> TriMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let s = 1.0 / (1.0 + phi * phi).sqrt();
    let a = s;
    let b = phi * s;
    let vertices = vec![
        Point3::new(-a, b, 0.0),
        Point3::new(a, b, 0.0),
        Point3::new(-a, -b, 0.0),
        Point3::new(a, -b, 0.0),
        Point3::new(0.0, -a, b),
        Point3::new(0.0, a, b),
        Point3::new(0.0, -a, -b),
        Point3::new(0.0, a, -b),
        Point3::new(b, 0.0, -a),
        Point3::new(b, 0.0, a),
        Point3::new(-b, 0.0, -a),
        Point3::new(-b, 0.0, a),
    ];
    let faces = vec![
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
    TriMesh::new(vertices, faces).expect("icosahedron is valid")
}

/// Regular octahedron with circumradius 1; every vertex has degree 4.
pub fn octahedron() -> TriMesh {
    let vertices = vec![
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, 0.0, -1.0),
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    TriMesh::new(vertices, faces).expect("octahedron is valid")
}

/// Icosphere of unit radius: icosahedron midpoint-subdivided `level` times
/// with every vertex projected onto the unit sphere. `level = 3` gives the
/// familiar 1280-face sphere.
pub fn icosphere(level: u32) -> TriMesh {
    if level == 0 {
        return icosahedron();
    }
    let sr = remesh::subdivide(&icosahedron(), level).expect("icosahedron subdivides");
    let mut mesh = sr.fine_mesh();
    for p in &mut mesh.vertices {
        let n = p.coords.norm();
        *p = Point3::from(p.coords / n);
    }
    mesh
}

/// Open cylinder of radius `radius` and height `height` along +z:
/// `segments` vertices around, `rings + 1` vertex rows, `2 * segments *
/// rings` faces, two boundary loops.
pub fn cylinder(segments: usize, rings: usize, radius: f64, height: f64) -> TriMesh {
    assert!(segments >= 3 && rings >= 1);
    let mut vertices = Vec::with_capacity(segments * (rings + 1));
    for r in 0..=rings {
        let z = height * r as f64 / rings as f64;
        for s in 0..segments {
            let theta = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(Point3::new(radius * theta.cos(), radius * theta.sin(), z));
        }
    }
    let mut faces = Vec::with_capacity(2 * segments * rings);
    let idx = |r: usize, s: usize| (r * segments + s % segments) as u32;
    for r in 0..rings {
        for s in 0..segments {
            faces.push([idx(r, s), idx(r, s + 1), idx(r + 1, s)]);
            faces.push([idx(r, s + 1), idx(r + 1, s + 1), idx(r + 1, s)]);
        }
    }
    TriMesh::new(vertices, faces).expect("cylinder is valid")
}

/// Bends points around a circular arc in the x-z plane: a point at height z
/// maps to arc length z on a circle of curvature `kappa`. `kappa = 0` is
/// the identity.
pub fn bend(mesh: &TriMesh, kappa: f64) -> TriMesh {
    if kappa.abs() < 1e-12 {
        return mesh.clone();
    }
    let r = 1.0 / kappa;
    let vertices = mesh
        .vertices
        .iter()
        .map(|p| {
            let theta = p.z * kappa;
            Point3::new(
                (p.x + r) * theta.cos() - r,
                p.y,
                (p.x + r) * theta.sin(),
            )
        })
        .collect();
    TriMesh::new(vertices, mesh.faces.clone()).expect("bend preserves topology")
}

/// A deforming cylinder sequence: `frames` meshes sharing one topology,
/// bent by a sinusoidally varying curvature with the given period (in
/// frames). Frame `t` and frame `t + period` coincide.
pub fn bent_cylinder_sequence(frames: usize, period: usize) -> Vec<TriMesh> {
    let template = cylinder(24, 16, 1.0, 4.0);
    (0..frames)
        .map(|t| {
            let kappa = 0.35 * (2.0 * PI * t as f64 / period as f64).sin();
            bend(&template, kappa)
        })
        .collect()
}

/// Open torus segment: `fraction` of a full torus with major radius
/// `major` and minor radius `minor`.
pub fn torus_segment(
    major_steps: usize,
    minor_steps: usize,
    major: f64,
    minor: f64,
    fraction: f64,
) -> TriMesh {
    assert!(major_steps >= 2 && minor_steps >= 3);
    let mut vertices = Vec::with_capacity((major_steps + 1) * minor_steps);
    for u in 0..=major_steps {
        let phi = 2.0 * PI * fraction * u as f64 / major_steps as f64;
        for v in 0..minor_steps {
            let psi = 2.0 * PI * v as f64 / minor_steps as f64;
            let ring = major + minor * psi.cos();
            vertices.push(Point3::new(
                ring * phi.cos(),
                ring * phi.sin(),
                minor * psi.sin(),
            ));
        }
    }
    let mut faces = Vec::new();
    let idx = |u: usize, v: usize| (u * minor_steps + v % minor_steps) as u32;
    for u in 0..major_steps {
        for v in 0..minor_steps {
            faces.push([idx(u, v), idx(u + 1, v), idx(u, v + 1)]);
            faces.push([idx(u + 1, v), idx(u + 1, v + 1), idx(u, v + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("torus segment is valid")
}

/// A mildly deforming torus-segment sequence (used as an unseen transfer
/// class): the minor radius breathes over time.
pub fn torus_segment_sequence(frames: usize, period: usize) -> Vec<TriMesh> {
    (0..frames)
        .map(|t| {
            let minor = 0.5 + 0.12 * (2.0 * PI * t as f64 / period as f64).sin();
            torus_segment(24, 12, 1.5, minor, 0.6)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_face_count() {
        let sphere = icosphere(3);
        assert_eq!(sphere.face_count(), 1280);
        assert_eq!(sphere.topology_report().euler_characteristic, 2);
        for p in &sphere.vertices {
            assert!((p.coords.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_is_open_manifold() {
        let cyl = cylinder(24, 16, 1.0, 4.0);
        let report = cyl.topology_report();
        assert_eq!(report.non_manifold_edges, 0);
        assert_eq!(report.boundary_edges, 48);
        assert_eq!(report.euler_characteristic, 0);
    }

    #[test]
    fn bend_sequence_is_periodic() {
        let seq = bent_cylinder_sequence(40, 16);
        for (a, b) in seq[0].vertices.iter().zip(&seq[16].vertices) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn torus_segment_is_open_manifold() {
        let torus = torus_segment(24, 12, 1.5, 0.5, 0.6);
        let report = torus.topology_report();
        assert_eq!(report.non_manifold_edges, 0);
        assert!(report.boundary_edges > 0);
    }
}
