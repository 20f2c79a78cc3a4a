//! Greedy edge-collapse simplification driven by quadric error metrics
//! with an edge-length regularizer.
//!
//! Collapses are drawn from a priority queue with lazy invalidation.
//! A candidate is rejected when it would create a non-manifold edge
//! (link condition), flip a face normal, pinch the boundary (interior
//! edge joining two boundary vertices), or move a boundary edge off the
//! boundary (boundary edges collapse to their midpoint, and edges with
//! one boundary endpoint collapse onto it).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Point3;

use crate::error::Result;
use crate::mesh::TriMesh;

use super::quadric::{collapse_cost, compute_vertex_quadrics, Quadric};

/// Simplification output. `reached_target` is false when every remaining
/// collapse was rejected before hitting the requested face count; the mesh
/// is then the best effort.
#[derive(Debug, Clone)]
pub struct SimplifyResult {
    pub mesh: TriMesh,
    pub reached_target: bool,
}

struct Candidate {
    cost: f64,
    u: u32,
    v: u32,
    gen_u: u64,
    gen_v: u64,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for lowest-cost-first, with the
        // edge id as a deterministic tiebreak.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| (other.u, other.v).cmp(&(self.u, self.v)))
    }
}

struct Collapser {
    positions: Vec<Point3<f64>>,
    faces: Vec<Option<[u32; 3]>>,
    vertex_faces: Vec<Vec<u32>>,
    quadrics: Vec<Quadric>,
    generation: Vec<u64>,
    alive_faces: usize,
}

impl Collapser {
    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out = Vec::new();
        for &f in &self.vertex_faces[v as usize] {
            let face = self.faces[f as usize].unwrap();
            for &w in &face {
                if w != v && !out.contains(&w) {
                    out.push(w);
                }
            }
        }
        out
    }

    fn shared_faces(&self, u: u32, v: u32) -> Vec<u32> {
        self.vertex_faces[u as usize]
            .iter()
            .copied()
            .filter(|&f| self.faces[f as usize].unwrap().contains(&v))
            .collect()
    }

    fn edge_face_count(&self, u: u32, v: u32) -> usize {
        self.vertex_faces[u as usize]
            .iter()
            .filter(|&&f| self.faces[f as usize].unwrap().contains(&v))
            .count()
    }

    fn is_boundary_vertex(&self, v: u32) -> bool {
        self.neighbors(v)
            .into_iter()
            .any(|w| self.edge_face_count(v, w) == 1)
    }

    /// Link condition: the common neighbors of `u` and `v` must be exactly
    /// the wing vertices of the faces shared by the edge.
    fn link_ok(&self, u: u32, v: u32, shared: &[u32]) -> bool {
        let nu = self.neighbors(u);
        let mut common: Vec<u32> = self
            .neighbors(v)
            .into_iter()
            .filter(|w| nu.contains(w))
            .collect();
        common.sort_unstable();
        let mut wings: Vec<u32> = shared
            .iter()
            .map(|&f| {
                let face = self.faces[f as usize].unwrap();
                *face.iter().find(|&&w| w != u && w != v).unwrap()
            })
            .collect();
        wings.sort_unstable();
        wings.dedup();
        common == wings
    }

    /// Any face surviving the collapse must keep its orientation once the
    /// kept vertex moves to `pos`.
    fn flips_normal(&self, u: u32, v: u32, shared: &[u32], pos: &Point3<f64>) -> bool {
        for &moved in &[u, v] {
            for &f in &self.vertex_faces[moved as usize] {
                if shared.contains(&f) {
                    continue;
                }
                let face = self.faces[f as usize].unwrap();
                let current: Vec<Point3<f64>> = face
                    .iter()
                    .map(|&w| self.positions[w as usize])
                    .collect();
                let after: Vec<Point3<f64>> = face
                    .iter()
                    .map(|&w| {
                        if w == u || w == v {
                            *pos
                        } else {
                            self.positions[w as usize]
                        }
                    })
                    .collect();
                let n0 = (current[1] - current[0]).cross(&(current[2] - current[0]));
                let n1 = (after[1] - after[0]).cross(&(after[2] - after[0]));
                if n1.norm_squared() < 1e-24 || n0.dot(&n1) < 0.0 {
                    return true;
                }
            }
        }
        false
    }

    fn collapse(&mut self, u: u32, v: u32, shared: &[u32], pos: Point3<f64>) {
        self.positions[u as usize] = pos;
        for &f in shared {
            let face = self.faces[f as usize].take().unwrap();
            for &w in &face {
                self.vertex_faces[w as usize].retain(|&g| g != f);
            }
            self.alive_faces -= 1;
        }
        let moved: Vec<u32> = self.vertex_faces[v as usize].drain(..).collect();
        for f in moved {
            let face = self.faces[f as usize].as_mut().unwrap();
            for w in face.iter_mut() {
                if *w == v {
                    *w = u;
                }
            }
            self.vertex_faces[u as usize].push(f);
        }
        self.quadrics[u as usize] = self.quadrics[u as usize].add(&self.quadrics[v as usize]);
        self.generation[u as usize] += 1;
        self.generation[v as usize] += 1;
    }

    fn as_mesh_for_cost(&self) -> TriMesh {
        // collapse_cost only touches vertex positions, so faces are not
        // needed here.
        TriMesh {
            vertices: self.positions.clone(),
            faces: Vec::new(),
        }
    }
}

/// Simplifies `mesh` to at most `target_faces` faces by greedy lowest-cost
/// edge collapse, where cost is QEM error plus `lambda_edge` times squared
/// edge length.
pub fn simplify(mesh: &TriMesh, target_faces: usize, lambda_edge: f64) -> Result<SimplifyResult> {
    if mesh.face_count() <= target_faces {
        return Ok(SimplifyResult {
            mesh: mesh.clone(),
            reached_target: true,
        });
    }
    let quadrics = compute_vertex_quadrics(mesh)?;
    let mut vertex_faces = vec![Vec::new(); mesh.vertex_count()];
    for (fi, face) in mesh.faces.iter().enumerate() {
        for &v in face {
            vertex_faces[v as usize].push(fi as u32);
        }
    }
    let mut state = Collapser {
        positions: mesh.vertices.clone(),
        faces: mesh.faces.iter().map(|f| Some(*f)).collect(),
        vertex_faces,
        quadrics,
        generation: vec![0; mesh.vertex_count()],
        alive_faces: mesh.face_count(),
    };

    let mut heap = BinaryHeap::new();
    let cost_mesh = state.as_mesh_for_cost();
    for (u, v) in mesh.edges() {
        let (cost, _) = collapse_cost(&cost_mesh, &state.quadrics, (u, v), lambda_edge);
        heap.push(Candidate {
            cost,
            u,
            v,
            gen_u: 0,
            gen_v: 0,
        });
    }

    while state.alive_faces > target_faces {
        let Some(cand) = heap.pop() else { break };
        let (u, v) = (cand.u, cand.v);
        if state.generation[u as usize] != cand.gen_u
            || state.generation[v as usize] != cand.gen_v
        {
            continue;
        }
        let shared = state.shared_faces(u, v);
        if shared.is_empty() {
            continue;
        }
        if !state.link_ok(u, v, &shared) {
            continue;
        }
        let boundary_edge = shared.len() == 1;
        let bu = state.is_boundary_vertex(u);
        let bv = state.is_boundary_vertex(v);
        if bu && bv && !boundary_edge {
            continue; // interior edge between boundary vertices: pinch
        }
        let pos = if boundary_edge {
            nalgebra::center(&state.positions[u as usize], &state.positions[v as usize])
        } else if bu {
            state.positions[u as usize]
        } else if bv {
            state.positions[v as usize]
        } else {
            let cost_mesh = state.as_mesh_for_cost();
            collapse_cost(&cost_mesh, &state.quadrics, (u, v), lambda_edge).1
        };
        if state.flips_normal(u, v, &shared, &pos) {
            continue;
        }
        state.collapse(u, v, &shared, pos);
        let cost_mesh = state.as_mesh_for_cost();
        for w in state.neighbors(u) {
            let (a, b) = (u.min(w), u.max(w));
            let (cost, _) = collapse_cost(&cost_mesh, &state.quadrics, (a, b), lambda_edge);
            heap.push(Candidate {
                cost,
                u: a,
                v: b,
                gen_u: state.generation[a as usize],
                gen_v: state.generation[b as usize],
            });
        }
    }

    let reached_target = state.alive_faces <= target_faces;

    // Compact: keep referenced vertices in their original order.
    let mut remap = vec![u32::MAX; state.positions.len()];
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for face in state.faces.iter().flatten() {
        let mut new_face = [0u32; 3];
        for (k, &w) in face.iter().enumerate() {
            if remap[w as usize] == u32::MAX {
                remap[w as usize] = vertices.len() as u32;
                vertices.push(state.positions[w as usize]);
            }
            new_face[k] = remap[w as usize];
        }
        faces.push(new_face);
    }
    Ok(SimplifyResult {
        mesh: TriMesh::new(vertices, faces)?,
        reached_target,
    })
}
