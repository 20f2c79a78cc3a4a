//! Face normals, areas, and area-weighted surface sampling.

use nalgebra::{Point3, Vector3};
use rand::Rng;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::rng;

/// Unit normal and area of face `f`. Zero-area faces yield a zero normal.
pub fn face_normal_area(mesh: &TriMesh, f: usize) -> (Vector3<f64>, f64) {
    let [a, b, c] = mesh.faces[f];
    let p0 = mesh.vertices[a as usize];
    let p1 = mesh.vertices[b as usize];
    let p2 = mesh.vertices[c as usize];
    let cross = (p1 - p0).cross(&(p2 - p0));
    let len = cross.norm();
    if len <= 0.0 {
        (Vector3::zeros(), 0.0)
    } else {
        (cross / len, 0.5 * len)
    }
}

/// Per-face unit normals and areas.
pub fn face_normals_areas(mesh: &TriMesh) -> Vec<(Vector3<f64>, f64)> {
    (0..mesh.face_count())
        .map(|f| face_normal_area(mesh, f))
        .collect()
}

/// `n` points sampled area-uniformly from the surface, deterministic per seed.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<Point3<f64>>> {
    let mut rng = rng::stream(seed, "surface-sample", 0);
    let draws = sample_surface_draws(mesh, n, &mut rng)?;
    Ok(eval_surface_draws(mesh, &draws))
}

/// As [`sample_surface`] but drawing from a caller-provided RNG.
pub fn sample_surface_with_rng(
    mesh: &TriMesh,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Point3<f64>>> {
    let draws = sample_surface_draws(mesh, n, rng)?;
    Ok(eval_surface_draws(mesh, &draws))
}

/// A sampled surface location: face index plus barycentric coordinates.
/// Keeping draws separate from evaluation lets the fitting loop re-evaluate
/// the same draws at deformed vertex positions.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceDraw {
    pub face: u32,
    pub bary: [f64; 3],
}

/// Draws `n` (face, barycentric) samples weighted by current face areas.
pub fn sample_surface_draws(
    mesh: &TriMesh,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<SurfaceDraw>> {
    let mut cumulative = Vec::with_capacity(mesh.face_count());
    let mut total = 0.0;
    for f in 0..mesh.face_count() {
        total += face_normal_area(mesh, f).1;
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::ZeroArea);
    }
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.gen::<f64>() * total;
        let face = cumulative.partition_point(|&c| c <= t).min(mesh.face_count() - 1);
        // Square-root trick: uniform in the triangle.
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let s = r1.sqrt();
        draws.push(SurfaceDraw {
            face: face as u32,
            bary: [1.0 - s, s * (1.0 - r2), s * r2],
        });
    }
    Ok(draws)
}

/// Evaluates draws at the mesh's current vertex positions.
pub fn eval_surface_draws(mesh: &TriMesh, draws: &[SurfaceDraw]) -> Vec<Point3<f64>> {
    draws
        .iter()
        .map(|d| {
            let [a, b, c] = mesh.faces[d.face as usize];
            Point3::from(
                d.bary[0] * mesh.vertices[a as usize].coords
                    + d.bary[1] * mesh.vertices[b as usize].coords
                    + d.bary[2] * mesh.vertices[c as usize].coords,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_right_triangle_normal_and_area() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let (n, a) = face_normal_area(&mesh, 0);
        assert!((a - 0.5).abs() < 1e-15);
        assert!((n - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn area_weighted_sampling_fractions() {
        // Two faces with areas 1 and 3; at 1e5 samples, the binomial 3-sigma
        // band around 0.75 is about +-0.004, so +-0.01 is comfortable.
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, -3.0, 0.0),
                Point3::new(2.0, -3.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 3, 4]],
        )
        .unwrap();
        let n = 100_000;
        let points = sample_surface(&mesh, n, 42).unwrap();
        let below = points.iter().filter(|p| p.y < 0.0).count();
        let fraction = below as f64 / n as f64;
        assert!((fraction - 0.75).abs() < 0.01, "fraction {fraction}");
    }

    #[test]
    fn sampling_is_deterministic_and_on_surface() {
        let mesh = crate::synth::icosahedron();
        let a = sample_surface(&mesh, 500, 7).unwrap();
        let b = sample_surface(&mesh, 500, 7).unwrap();
        assert_eq!(a, b);
        // Every sample lies on some face plane, inside the triangle.
        for p in &a {
            let mut on_some_face = false;
            for f in 0..mesh.face_count() {
                let [i, j, k] = mesh.faces[f];
                let (n, _) = face_normal_area(&mesh, f);
                let d = n.dot(&(p - mesh.vertices[i as usize]));
                if d.abs() < 1e-9 {
                    // check barycentric containment
                    let p0 = mesh.vertices[i as usize];
                    let p1 = mesh.vertices[j as usize];
                    let p2 = mesh.vertices[k as usize];
                    let v0 = p1 - p0;
                    let v1 = p2 - p0;
                    let v2 = p - p0;
                    let d00 = v0.dot(&v0);
                    let d01 = v0.dot(&v1);
                    let d11 = v1.dot(&v1);
                    let d20 = v2.dot(&v0);
                    let d21 = v2.dot(&v1);
                    let denom = d00 * d11 - d01 * d01;
                    let v = (d11 * d20 - d01 * d21) / denom;
                    let w = (d00 * d21 - d01 * d20) / denom;
                    let u = 1.0 - v - w;
                    if (-1e-12..=1.0 + 1e-12).contains(&u)
                        && (-1e-12..=1.0 + 1e-12).contains(&v)
                        && (-1e-12..=1.0 + 1e-12).contains(&w)
                    {
                        on_some_face = true;
                        break;
                    }
                }
            }
            assert!(on_some_face);
        }
    }

    #[test]
    fn zero_area_mesh_rejected() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            sample_surface(&mesh, 10, 0),
            Err(Error::ZeroArea)
        ));
    }
}
