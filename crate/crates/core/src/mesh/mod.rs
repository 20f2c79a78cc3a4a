//! Triangular surface meshes: storage, topology queries, and geometric
//! utilities shared by the remeshing and learning stages.

mod io;
mod sample;

pub use io::{load_mesh, load_obj, load_off, save_mesh};
pub use sample::{
    eval_surface_draws, face_normal_area, face_normals_areas, sample_surface,
    sample_surface_draws, sample_surface_with_rng, SurfaceDraw,
};

use std::collections::{HashMap, VecDeque};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// An irregular triangular surface mesh: vertex positions plus faces that
/// index into them. Faces are stored counterclockwise. Immutable after
/// construction; all queries are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
}

/// Connectivity summary produced by [`TriMesh::topology_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyReport {
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub euler_characteristic: i64,
}

impl TriMesh {
    /// Builds a mesh, validating that face indices are in range and that no
    /// face repeats a vertex.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v as usize >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        vertex: v as usize,
                        vertex_count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace { face: fi });
            }
        }
        Ok(TriMesh { vertices, faces })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Undirected edge set, each edge reported once as `(min, max)`.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self
            .faces
            .iter()
            .flat_map(|f| {
                [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]
                    .into_iter()
                    .map(|(a, b)| (a.min(b), a.max(b)))
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Map from undirected edge to the number of incident faces.
    pub fn edge_face_counts(&self) -> HashMap<(u32, u32), u32> {
        let mut counts = HashMap::with_capacity(self.faces.len() * 3 / 2);
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *counts.entry((a.min(b), a.max(b))).or_insert(0u32) += 1;
            }
        }
        counts
    }

    /// Neighbors of `v` in cyclic fan order by face adjacency.
    ///
    /// At boundary vertices the fan starts at the boundary edge and walks
    /// inward; at interior vertices it starts at the lowest-index neighbor,
    /// making the result deterministic.
    pub fn one_ring(&self, v: u32) -> Vec<u32> {
        // Each incident face (v, a, b) in ccw order contributes the directed
        // step a -> b around v.
        let mut next: HashMap<u32, u32> = HashMap::new();
        let mut has_pred: HashMap<u32, bool> = HashMap::new();
        for f in &self.faces {
            let Some(k) = f.iter().position(|&x| x == v) else {
                continue;
            };
            let a = f[(k + 1) % 3];
            let b = f[(k + 2) % 3];
            next.insert(a, b);
            has_pred.entry(a).or_insert(false);
            *has_pred.entry(b).or_insert(false) = true;
        }
        if next.is_empty() {
            return Vec::new();
        }
        // Boundary fan: a unique neighbor with no predecessor; interior fan:
        // closed cycle, start at the smallest id.
        let start = has_pred
            .iter()
            .filter(|(_, &p)| !p)
            .map(|(&a, _)| a)
            .min()
            .unwrap_or_else(|| *next.keys().min().unwrap());
        let mut ring = vec![start];
        let mut cur = start;
        while let Some(&n) = next.get(&cur) {
            if n == start {
                break;
            }
            ring.push(n);
            cur = n;
            if ring.len() > next.len() + 1 {
                break; // malformed fan; avoid looping forever
            }
        }
        ring
    }

    pub fn vertex_degree(&self, v: u32) -> usize {
        self.one_ring(v).len()
    }

    /// Vertices reachable from `v` within `r` edges, including `v` itself
    /// at distance zero. Returned sorted.
    pub fn r_ring(&self, v: u32, r: u32) -> Vec<u32> {
        let mut adjacency: HashMap<u32, Vec<u32>> = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                adjacency.entry(a).or_default().push(b);
                adjacency.entry(b).or_default().push(a);
            }
        }
        let mut dist: HashMap<u32, u32> = HashMap::new();
        dist.insert(v, 0);
        let mut queue = VecDeque::new();
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == r {
                continue;
            }
            if let Some(nbrs) = adjacency.get(&u) {
                for &w in nbrs {
                    dist.entry(w).or_insert_with(|| {
                        queue.push_back(w);
                        d + 1
                    });
                }
            }
        }
        let mut out: Vec<u32> = dist.into_keys().collect();
        out.sort_unstable();
        out
    }

    /// Boundary edge count, non-manifold edge count, and Euler
    /// characteristic V - E + F.
    pub fn topology_report(&self) -> TopologyReport {
        let counts = self.edge_face_counts();
        let boundary = counts.values().filter(|&&c| c == 1).count();
        let non_manifold = counts.values().filter(|&&c| c > 2).count();
        TopologyReport {
            boundary_edges: boundary,
            non_manifold_edges: non_manifold,
            euler_characteristic: self.vertices.len() as i64 - counts.len() as i64
                + self.faces.len() as i64,
        }
    }

    /// Vertices that touch at least one boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let counts = self.edge_face_counts();
        let mut boundary = vec![false; self.vertices.len()];
        for ((a, b), c) in counts {
            if c == 1 {
                boundary[a as usize] = true;
                boundary[b as usize] = true;
            }
        }
        boundary
    }

    /// Uniformly scales and translates so the bounding box is centered at
    /// the origin and the longest axis spans exactly [-1, 1]; the other axes
    /// use the same factor, preserving aspect ratio.
    pub fn normalize_unit_cube(&self) -> Result<(TriMesh, UnitCubeTransform)> {
        if self.vertices.is_empty() {
            return Err(Error::ZeroExtent);
        }
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = hi - lo;
        let longest = extent.amax();
        if longest <= 0.0 {
            return Err(Error::ZeroExtent);
        }
        let scale = 2.0 / longest;
        let center = nalgebra::center(&lo, &hi);
        let transform = UnitCubeTransform {
            scale,
            translation: -scale * center.coords,
        };
        let vertices = self.vertices.iter().map(|p| transform.apply(p)).collect();
        Ok((
            TriMesh {
                vertices,
                faces: self.faces.clone(),
            },
            transform,
        ))
    }
}

/// Uniform scale plus translation mapping a mesh into the unit cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCubeTransform {
    pub scale: f64,
    pub translation: Vector3<f64>,
}

impl UnitCubeTransform {
    pub fn identity() -> Self {
        UnitCubeTransform {
            scale: 1.0,
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.scale * p.coords + self.translation)
    }

    pub fn invert(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from((p.coords - self.translation) / self.scale)
    }
}
