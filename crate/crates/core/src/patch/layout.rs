//! Assignment of pad cells to mesh data.
//!
//! Every patch cell gets a fill rule. Interior cells copy their own fine
//! vertex. Pad cells across a base edge copy the mirrored lattice vertices
//! of the adjacent patch. Corner pad cells around a base vertex of degree
//! six copy the uniquely determined fan vertices; around higher-degree
//! vertices they copy the nearest fan vertices reached by walking the fan
//! clockwise and counterclockwise from the patch's own corner edges;
//! around lower-degree vertices they are interpolated at extraction time.
//! Cells across a mesh boundary replicate the nearest patch boundary
//! vertex. The layout depends on topology only.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::remesh::SemiRegularMesh;

use super::shape::{grid_shape, GridShape};

/// Fill rule for one patch cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSource {
    /// Copy this fine vertex's features.
    Vertex(u32),
    /// Mesh boundary: replicate this (boundary) vertex's features.
    Replicate(u32),
    /// Fill from already-filled lattice neighbors at extraction time.
    Interpolate,
}

/// Per-base-face cell sources over the padded grid.
#[derive(Debug, Clone)]
pub struct PatchLayout {
    pub level: u32,
    pub pad: u32,
    pub shape: Arc<GridShape>,
    /// `cells[face][storage_index]`; `None` marks invalid storage cells.
    pub cells: Vec<Vec<Option<CellSource>>>,
}

/// Maps frame-local coordinates to grid coordinates for a corner role:
/// role 0 is the identity, roles 1 and 2 rotate so the face's second and
/// third corner sit at the local origin.
fn frame_to_grid(role: usize, n: i32, x: i32, y: i32) -> (i32, i32) {
    match role {
        0 => (x, y),
        1 => (n - x - y, x),
        2 => (y, n - x - y),
        _ => unreachable!(),
    }
}

/// Squared Euclidean norm of a lattice vector under the equilateral
/// embedding: `|x e1 + y e2|^2 = x^2 + xy + y^2`.
fn flat_norm2(x: i32, y: i32) -> i64 {
    let (x, y) = (x as i64, y as i64);
    x * x + x * y + y * y
}

struct LayoutBuilder<'a> {
    sr: &'a SemiRegularMesh,
    n: i32,
    /// face containing the directed base edge (a, b).
    directed: HashMap<(u32, u32), u32>,
    boundary: Vec<bool>,
    rings: Vec<Vec<u32>>,
}

impl<'a> LayoutBuilder<'a> {
    fn new(sr: &'a SemiRegularMesh) -> Self {
        let mut directed = HashMap::new();
        for (fi, f) in sr.base.faces.iter().enumerate() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                directed.entry((a, b)).or_insert(fi as u32);
            }
        }
        let boundary = sr.base.boundary_vertices();
        let rings = (0..sr.base.vertex_count() as u32)
            .map(|v| sr.base.one_ring(v))
            .collect();
        LayoutBuilder {
            sr,
            n: sr.n() as i32,
            directed,
            boundary,
            rings,
        }
    }

    fn grid_id(&self, face: u32, i: i32, j: i32) -> u32 {
        self.sr.patch_grids[face as usize].get(i as u32, j as u32)
    }

    /// Fine vertex `k` lattice steps from base vertex `c` along the base
    /// edge toward `x`; `None` when no face carries the directed edge.
    fn edge_step(&self, c: u32, x: u32, k: i32) -> Option<u32> {
        let &face = self.directed.get(&(c, x))?;
        let tuple = self.sr.base.faces[face as usize];
        let role = tuple.iter().position(|&v| v == c)?;
        debug_assert_eq!(tuple[(role + 1) % 3], x);
        let (i, j) = frame_to_grid(role, self.n, k, 0);
        Some(self.grid_id(face, i, j))
    }

    /// The single ring-2 lattice vertex interior to the wedge face that
    /// carries the directed edge `c -> first`: local `(1, 1)` seen from
    /// `c`'s corner of that face.
    fn wedge_interior2(&self, c: u32, first: u32) -> Option<u32> {
        let &face = self.directed.get(&(c, first))?;
        let tuple = self.sr.base.faces[face as usize];
        let role = tuple.iter().position(|&v| v == c)?;
        let (i, j) = frame_to_grid(role, self.n, 1, 1);
        Some(self.grid_id(face, i, j))
    }

    /// Corner pad cell sources around base vertex `c` for a patch whose
    /// bottom edge heads to `e0` and left edge to `e1` (counterclockwise).
    /// `local` is the cell in that corner's frame.
    fn corner_source(&self, c: u32, e0: u32, e1: u32, local: (i32, i32)) -> CellSource {
        if self.boundary[c as usize] {
            return CellSource::Replicate(c);
        }
        let ring = &self.rings[c as usize];
        let d = ring.len();
        if d < 6 {
            return CellSource::Interpolate;
        }
        let Some(pos0) = ring.iter().position(|&v| v == e0) else {
            return CellSource::Interpolate;
        };
        if ring[(pos0 + 1) % d] != e1 {
            return CellSource::Interpolate;
        }
        let cw = |m: usize| ring[(pos0 + d - m) % d];
        let ccw = |m: usize| ring[(pos0 + 1 + m) % d];
        let id = match local {
            (0, -1) => self.edge_step(c, cw(2), 1),
            (-1, 0) => self.edge_step(c, ccw(2), 1),
            (0, -2) => self.edge_step(c, cw(2), 2),
            (1, -2) => self.wedge_interior2(c, cw(2)),
            (-1, -1) => self.wedge_interior2(c, cw(3)),
            (-2, 0) => self.edge_step(c, ccw(2), 2),
            (-2, 1) => self.wedge_interior2(c, ccw(1)),
            _ => None,
        };
        id.map(CellSource::Vertex).unwrap_or(CellSource::Interpolate)
    }

    /// Nearest patch-boundary lattice vertex to `cell` in the flat metric;
    /// ties break toward the smaller coordinate pair.
    fn nearest_boundary_vertex(&self, face: u32, cell: (i32, i32)) -> u32 {
        let n = self.n;
        let mut best: Option<((i32, i32), i64)> = None;
        let mut consider = |i: i32, j: i32| {
            let d = flat_norm2(cell.0 - i, cell.1 - j);
            let better = match &best {
                None => true,
                Some((coords, bd)) => d < *bd || (d == *bd && (i, j) < *coords),
            };
            if better {
                best = Some(((i, j), d));
            }
        };
        for t in 0..=n {
            consider(t, 0);
            consider(0, t);
            consider(n - t, t);
        }
        let ((i, j), _) = best.unwrap();
        self.grid_id(face, i, j)
    }
}

/// Builds the topology-only pad layout for every patch of `sr`.
pub fn build_layout(sr: &SemiRegularMesh, pad: u32) -> Result<PatchLayout> {
    let level = sr.level;
    if pad > (1 << level) / 2 {
        return Err(Error::PadTooLarge { pad, level });
    }
    if pad > 2 {
        return Err(Error::PadUnsupported { pad });
    }
    let shape = grid_shape(level, pad);
    let builder = LayoutBuilder::new(sr);
    let n = builder.n;
    let w = pad as i32;

    let corner_cells: &[(i32, i32)] = match pad {
        0 => &[],
        1 => &[(0, -1), (-1, 0)],
        _ => &[
            (0, -1),
            (-1, 0),
            (0, -2),
            (1, -2),
            (-1, -1),
            (-2, 0),
            (-2, 1),
        ],
    };

    let mut cells = Vec::with_capacity(sr.base.face_count());
    for (fi, tuple) in sr.base.faces.iter().enumerate() {
        let fi = fi as u32;
        let mut sources: Vec<Option<CellSource>> = vec![None; shape.side * shape.side];

        // Interior cells copy their own lattice vertex.
        for j in 0..=n {
            for i in 0..=(n - j) {
                let idx = shape.index_of(i, j).unwrap();
                sources[idx] = Some(CellSource::Vertex(builder.grid_id(fi, i, j)));
            }
        }

        for role in 0..3usize {
            let ca = tuple[role];
            let cb = tuple[(role + 1) % 3];
            let cc = tuple[(role + 2) % 3];

            // Pad rows across the edge ca -> cb (the bottom of this frame).
            for k in 1..=w {
                for a in k..=n {
                    let (gi, gj) = frame_to_grid(role, n, a, -k);
                    let idx = shape.index_of(gi, gj).unwrap();
                    debug_assert!(shape.valid[idx]);
                    let source = match builder.directed.get(&(cb, ca)) {
                        Some(&nbr) => {
                            // Mirrored continuation: in the frame whose
                            // corners are (cb, ca, .), the cell sits at
                            // (n - a, k).
                            let nbr_tuple = builder.sr.base.faces[nbr as usize];
                            let nbr_role =
                                nbr_tuple.iter().position(|&v| v == cb).expect("edge face");
                            debug_assert_eq!(nbr_tuple[(nbr_role + 1) % 3], ca);
                            let (pi, pj) = frame_to_grid(nbr_role, n, n - a, k);
                            CellSource::Vertex(builder.grid_id(nbr, pi, pj))
                        }
                        None => {
                            CellSource::Replicate(builder.nearest_boundary_vertex(fi, (gi, gj)))
                        }
                    };
                    sources[idx] = Some(source);
                }
            }

            // Corner cells around this frame's origin vertex.
            for &(x, y) in corner_cells {
                let (gi, gj) = frame_to_grid(role, n, x, y);
                let idx = shape.index_of(gi, gj).unwrap();
                debug_assert!(shape.valid[idx]);
                let source = match builder.corner_source(ca, cb, cc, (x, y)) {
                    CellSource::Replicate(_) => {
                        CellSource::Replicate(builder.nearest_boundary_vertex(fi, (gi, gj)))
                    }
                    other => other,
                };
                sources[idx] = Some(source);
            }
        }

        debug_assert_eq!(
            sources.iter().flatten().count(),
            shape.valid_count,
            "every valid cell must have a source"
        );
        cells.push(sources);
    }

    Ok(PatchLayout {
        level,
        pad,
        shape,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriMesh;
    use crate::remesh::subdivide;
    use crate::synth;
    use nalgebra::Point3;

    #[test]
    fn icosahedron_patches_have_111_valid_cells() {
        let sr = subdivide(&synth::icosahedron(), 3).unwrap();
        let layout = build_layout(&sr, 2).unwrap();
        assert_eq!(layout.cells.len(), 20);
        for sources in &layout.cells {
            assert_eq!(sources.iter().flatten().count(), 111);
        }
    }

    #[test]
    fn octahedron_corners_interpolate() {
        let sr = subdivide(&synth::octahedron(), 3).unwrap();
        let layout = build_layout(&sr, 2).unwrap();
        for sources in &layout.cells {
            assert_eq!(sources.iter().flatten().count(), 111);
            let interpolate = sources
                .iter()
                .flatten()
                .filter(|s| matches!(s, CellSource::Interpolate))
                .count();
            // Degree-4 corners: all 3 x 7 corner cells interpolate.
            assert_eq!(interpolate, 21);
        }
    }

    #[test]
    fn single_triangle_ring_replicates() {
        let tri = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let sr = subdivide(&tri, 2).unwrap();
        let layout = build_layout(&sr, 1).unwrap();
        let replicate = layout.cells[0]
            .iter()
            .flatten()
            .filter(|s| matches!(s, CellSource::Replicate(_)))
            .count();
        assert_eq!(replicate, 18); // 33 valid - 15 interior
    }

    #[test]
    fn interior_cells_always_map_to_vertices() {
        let sr = subdivide(&synth::icosahedron(), 2).unwrap();
        let layout = build_layout(&sr, 1).unwrap();
        for (f, sources) in layout.cells.iter().enumerate() {
            for (idx, source) in sources.iter().enumerate() {
                if layout.shape.interior[idx] {
                    let (i, j) = layout.shape.coords_of(idx);
                    assert_eq!(
                        *source,
                        Some(CellSource::Vertex(
                            sr.patch_grids[f].get(i as u32, j as u32)
                        ))
                    );
                }
            }
        }
    }

    #[test]
    fn pad_too_large_rejected() {
        let sr = subdivide(&synth::icosahedron(), 1).unwrap();
        assert!(matches!(
            build_layout(&sr, 2),
            Err(Error::PadTooLarge { .. })
        ));
    }

    #[test]
    fn layout_is_topology_only() {
        // Same base topology, different geometry: identical layouts.
        let sr1 = subdivide(&synth::icosahedron(), 3).unwrap();
        let mut moved = synth::icosahedron();
        for p in &mut moved.vertices {
            *p = Point3::from(p.coords * 2.5) + nalgebra::Vector3::new(1.0, -2.0, 0.3);
        }
        let sr2 = subdivide(&moved, 3).unwrap();
        let l1 = build_layout(&sr1, 2).unwrap();
        let l2 = build_layout(&sr2, 2).unwrap();
        for (a, b) in l1.cells.iter().zip(&l2.cells) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn degree_six_corners_resolve_to_unique_fan_vertices() {
        // A planar lattice: subdividing an equilateral triangle twice gives
        // a base whose three innermost vertices have degree 6.
        let tri = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(4.0, 0.0, 0.0),
                Point3::new(2.0, 2.0 * 3f64.sqrt(), 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let base = subdivide(&tri, 2).unwrap().fine_mesh();
        // Center face of the 1-4 split touches all three degree-6 vertices.
        let sr = subdivide(&base, 2).unwrap();
        let layout = build_layout(&sr, 1).unwrap();
        let center_face = base
            .faces
            .iter()
            .position(|f| f.iter().all(|&v| base.vertex_degree(v) == 6))
            .expect("center face exists");
        let sources = &layout.cells[center_face];
        for s in sources.iter().flatten() {
            assert!(
                matches!(s, CellSource::Vertex(_)),
                "degree-6 fan must resolve uniquely, got {s:?}"
            );
        }
    }
}
