//! Barycentric parametrization of a semi-regular mesh over a template
//! mesh, and its transfer to deformed meshes of identical topology.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

use super::subdivide::SemiRegularMesh;

/// Per-fine-vertex closest face on the template plus clamped barycentric
/// coordinates (non-negative, summing to one).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarycentricParam {
    pub template_vertex_count: usize,
    pub template_faces: Vec<[u32; 3]>,
    pub entries: Vec<(u32, [f64; 3])>,
}

/// Closest point on a triangle, returned with barycentric coordinates.
/// Standard region-by-region case analysis.
fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> (Point3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + v * ab, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + w * ac, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + w * (c - b), [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

#[derive(Clone, Copy)]
struct Aabb {
    lo: Point3<f64>,
    hi: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            hi: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Point3<f64>) {
        for k in 0..3 {
            self.lo[k] = self.lo[k].min(p[k]);
            self.hi[k] = self.hi[k].max(p[k]);
        }
    }

    fn dist2(&self, p: &Point3<f64>) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = (self.lo[k] - p[k]).max(0.0).max(p[k] - self.hi[k]);
            d += v * v;
        }
        d
    }
}

enum BvhNode {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

/// Bounding-volume tree over a mesh's triangles for exact closest-point
/// queries.
pub struct TriBvh {
    mesh: TriMesh,
    order: Vec<u32>,
    boxes: Vec<Aabb>,
    nodes: Vec<BvhNode>,
    root: usize,
}

impl TriBvh {
    pub fn build(mesh: &TriMesh) -> Self {
        let centroids: Vec<Point3<f64>> = mesh
            .faces
            .iter()
            .map(|f| {
                Point3::from(
                    (mesh.vertices[f[0] as usize].coords
                        + mesh.vertices[f[1] as usize].coords
                        + mesh.vertices[f[2] as usize].coords)
                        / 3.0,
                )
            })
            .collect();
        let mut bvh = TriBvh {
            mesh: mesh.clone(),
            order: (0..mesh.face_count() as u32).collect(),
            boxes: Vec::new(),
            nodes: Vec::new(),
            root: 0,
        };
        bvh.root = bvh.split(0, mesh.face_count(), &centroids);
        bvh
    }

    fn face_box(&self, f: u32) -> Aabb {
        let mut b = Aabb::empty();
        for &v in &self.mesh.faces[f as usize] {
            b.grow(&self.mesh.vertices[v as usize]);
        }
        b
    }

    fn split(&mut self, start: usize, end: usize, centroids: &[Point3<f64>]) -> usize {
        let mut bbox = Aabb::empty();
        for &f in &self.order[start..end] {
            let fb = self.face_box(f);
            bbox.grow(&fb.lo);
            bbox.grow(&fb.hi);
        }
        if end - start <= 4 {
            self.boxes.push(bbox);
            self.nodes.push(BvhNode::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mut cbox = Aabb::empty();
        for &f in &self.order[start..end] {
            cbox.grow(&centroids[f as usize]);
        }
        let extent = cbox.hi - cbox.lo;
        let axis = (0..3).max_by(|&a, &b| extent[a].total_cmp(&extent[b])).unwrap();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis]
                .total_cmp(&centroids[b as usize][axis])
                .then(a.cmp(&b))
        });
        let left = self.split(start, mid, centroids);
        let right = self.split(mid, end, centroids);
        self.boxes.push(bbox);
        self.nodes.push(BvhNode::Inner { left, right });
        self.nodes.len() - 1
    }

    /// Closest surface point to `q`: face index, point, barycentric
    /// coordinates, squared distance.
    pub fn closest_point(&self, q: &Point3<f64>) -> (u32, Point3<f64>, [f64; 3], f64) {
        let mut best = (0u32, *q, [0.0; 3], f64::INFINITY);
        self.query(self.root, q, &mut best);
        best
    }

    fn query(&self, node: usize, q: &Point3<f64>, best: &mut (u32, Point3<f64>, [f64; 3], f64)) {
        if self.boxes[node].dist2(q) >= best.3 {
            return;
        }
        match &self.nodes[node] {
            BvhNode::Leaf { start, end } => {
                for &f in &self.order[*start..*end] {
                    let [a, b, c] = self.mesh.faces[f as usize];
                    let (point, bary) = closest_point_on_triangle(
                        q,
                        &self.mesh.vertices[a as usize],
                        &self.mesh.vertices[b as usize],
                        &self.mesh.vertices[c as usize],
                    );
                    let d = (point - q).norm_squared();
                    if d < best.3 {
                        *best = (f, point, bary, d);
                    }
                }
            }
            BvhNode::Inner { left, right } => {
                // Visit the nearer child first for tighter pruning.
                let (dl, dr) = (self.boxes[*left].dist2(q), self.boxes[*right].dist2(q));
                let (first, second) = if dl <= dr {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.query(first, q, best);
                self.query(second, q, best);
            }
        }
    }
}

/// Projects every fine vertex of `sr` to its closest point on `template`.
pub fn project_parametrize(sr: &SemiRegularMesh, template: &TriMesh) -> BarycentricParam {
    let bvh = TriBvh::build(template);
    let entries = sr
        .fine_positions
        .iter()
        .map(|p| {
            let (face, _, bary, _) = bvh.closest_point(p);
            (face, bary)
        })
        .collect();
    BarycentricParam {
        template_vertex_count: template.vertex_count(),
        template_faces: template.faces.clone(),
        entries,
    }
}

/// Evaluates a parametrization on a deformed mesh with the template's
/// topology, yielding transferred fine-vertex positions.
pub fn apply_parametrization(
    param: &BarycentricParam,
    deformed: &TriMesh,
) -> Result<Vec<Point3<f64>>> {
    if deformed.vertex_count() != param.template_vertex_count
        || deformed.faces != param.template_faces
    {
        return Err(Error::TopologyMismatch(
            "deformed mesh does not share the template's topology".into(),
        ));
    }
    Ok(param
        .entries
        .iter()
        .map(|&(face, bary)| {
            let [a, b, c] = deformed.faces[face as usize];
            Point3::from(
                bary[0] * deformed.vertices[a as usize].coords
                    + bary[1] * deformed.vertices[b as usize].coords
                    + bary[2] * deformed.vertices[c as usize].coords,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::remesh::subdivide;
    use crate::synth;
    use nalgebra::{Rotation3, Vector3};
    use rand::Rng;

    #[test]
    fn bvh_matches_brute_force() {
        let mesh = synth::icosphere(2);
        let bvh = TriBvh::build(&mesh);
        let mut rng = crate::rng::stream(9, "bvh-test", 0);
        for _ in 0..200 {
            let q = Point3::new(
                2.0 * rng.gen::<f64>() - 1.0,
                2.0 * rng.gen::<f64>() - 1.0,
                2.0 * rng.gen::<f64>() - 1.0,
            );
            let (_, _, _, d) = bvh.closest_point(&q);
            let brute = (0..mesh.face_count())
                .map(|f| {
                    let [a, b, c] = mesh.faces[f];
                    let (p, _) = closest_point_on_triangle(
                        &q,
                        &mesh.vertices[a as usize],
                        &mesh.vertices[b as usize],
                        &mesh.vertices[c as usize],
                    );
                    (p - q).norm_squared()
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, brute);
        }
    }

    #[test]
    fn identity_transfer() {
        let template = synth::icosphere(1);
        let sr = subdivide(&synth::icosahedron(), 2).unwrap();
        let param = project_parametrize(&sr, &template);
        let projected: Vec<Point3<f64>> = sr
            .fine_positions
            .iter()
            .map(|p| TriBvh::build(&template).closest_point(p).1)
            .collect();
        let transferred = apply_parametrization(&param, &template).unwrap();
        for (a, b) in projected.iter().zip(&transferred) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rigid_motion_equivariance() {
        let template = synth::icosphere(1);
        let sr = subdivide(&synth::icosahedron(), 2).unwrap();
        let param = project_parametrize(&sr, &template);
        let base = apply_parametrization(&param, &template).unwrap();
        let rotation = Rotation3::from_axis_angle(&Vector3::z_axis(), 0.7);
        let moved = TriMesh::new(
            template
                .vertices
                .iter()
                .map(|p| rotation * p + Vector3::new(0.3, -0.1, 0.5))
                .collect(),
            template.faces.clone(),
        )
        .unwrap();
        let transferred = apply_parametrization(&param, &moved).unwrap();
        for (p, t) in base.iter().zip(&transferred) {
            let expected = rotation * p + Vector3::new(0.3, -0.1, 0.5);
            assert!((expected - t).norm() < 1e-9);
        }
    }

    #[test]
    fn vertex_on_template_vertex_gets_unit_barycentric() {
        let template = synth::icosahedron();
        let q = template.vertices[4];
        let bvh = TriBvh::build(&template);
        let (_, p, bary, d) = bvh.closest_point(&q);
        assert!(d < 1e-24);
        assert!((p - q).norm() < 1e-12);
        let ones = bary.iter().filter(|&&b| (b - 1.0).abs() < 1e-12).count();
        let zeros = bary.iter().filter(|&&b| b.abs() < 1e-12).count();
        assert_eq!((ones, zeros), (1, 2));
    }

    #[test]
    fn topology_mismatch_rejected() {
        let template = synth::icosphere(1);
        let sr = subdivide(&synth::icosahedron(), 2).unwrap();
        let param = project_parametrize(&sr, &template);
        let other = synth::icosphere(2);
        assert!(matches!(
            apply_parametrization(&param, &other),
            Err(Error::TopologyMismatch(_))
        ));
    }
}
