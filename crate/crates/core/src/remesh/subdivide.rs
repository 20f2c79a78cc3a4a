//! Midpoint subdivision of a base mesh into a semi-regular mesh.
//!
//! Each base face carries a triangular barycentric lattice of side
//! `n = 2^level`; lattice points on shared edges and corners are
//! deduplicated globally, so the fine mesh is watertight wherever the base
//! is. Applying 1-to-4 midpoint subdivision `level` times yields exactly
//! this lattice, so the hierarchy is constructed directly.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Per-base-face map from lattice coordinates `(i, j)` with `i + j <= n`
/// to global fine-vertex ids. Corner `(0,0)` is the face's first vertex,
/// `(n,0)` the second, `(0,n)` the third.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchIndexGrid {
    n: u32,
    ids: Vec<u32>,
}

impl PatchIndexGrid {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, i: u32, j: u32) -> u32 {
        debug_assert!(i + j <= self.n);
        self.ids[row_offset(self.n as usize, j as usize) + i as usize]
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Number of lattice points: (n+1)(n+2)/2.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn row_offset(n: usize, j: usize) -> usize {
    j * (n + 1) - j * (j.saturating_sub(1)) / 2
}

/// A base mesh together with its subdivision hierarchy and fine geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiRegularMesh {
    pub base: TriMesh,
    pub level: u32,
    pub fine_positions: Vec<Point3<f64>>,
    pub patch_grids: Vec<PatchIndexGrid>,
}

impl SemiRegularMesh {
    /// Lattice side length `2^level`.
    pub fn n(&self) -> u32 {
        1 << self.level
    }

    /// Enumerates fine faces patch by patch. Each fine face belongs to
    /// exactly one patch, so no deduplication is needed.
    pub fn fine_faces(&self) -> Vec<[u32; 3]> {
        let n = self.n();
        let mut faces = Vec::with_capacity(self.base.face_count() << (2 * self.level));
        for grid in &self.patch_grids {
            for j in 0..n {
                for i in 0..(n - j) {
                    faces.push([grid.get(i, j), grid.get(i + 1, j), grid.get(i, j + 1)]);
                    if i + j + 1 < n {
                        faces.push([
                            grid.get(i + 1, j),
                            grid.get(i + 1, j + 1),
                            grid.get(i, j + 1),
                        ]);
                    }
                }
            }
        }
        faces
    }

    /// The fine mesh as a plain `TriMesh`.
    pub fn fine_mesh(&self) -> TriMesh {
        TriMesh {
            vertices: self.fine_positions.clone(),
            faces: self.fine_faces(),
        }
    }

    /// Returns a copy with replaced fine positions.
    pub fn with_positions(&self, positions: Vec<Point3<f64>>) -> SemiRegularMesh {
        assert_eq!(positions.len(), self.fine_positions.len());
        SemiRegularMesh {
            base: self.base.clone(),
            level: self.level,
            fine_positions: positions,
            patch_grids: self.patch_grids.clone(),
        }
    }

    /// Checks structural invariants: grid sizes, id ranges, and agreement
    /// of shared-edge vertex ids between adjacent patches.
    pub fn validate(&self) -> Result<()> {
        let n = self.n() as usize;
        let expected = (n + 1) * (n + 2) / 2;
        if self.patch_grids.len() != self.base.face_count() {
            return Err(Error::Invalid("patch grid count != base face count".into()));
        }
        for grid in &self.patch_grids {
            if grid.len() != expected || grid.n as usize != n {
                return Err(Error::Invalid("patch grid has wrong lattice size".into()));
            }
            for &id in grid.ids() {
                if id as usize >= self.fine_positions.len() {
                    return Err(Error::Invalid("patch grid id out of range".into()));
                }
            }
        }
        // Shared edges: walk each base face's three edges and record the id
        // sequence keyed by the undirected base edge; all patches must agree.
        let n = self.n();
        let mut seen: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (f, face) in self.base.faces.iter().enumerate() {
            let grid = &self.patch_grids[f];
            let sides = [
                (face[0], face[1], (0..=n).map(|t| grid.get(t, 0)).collect::<Vec<_>>()),
                (face[1], face[2], (0..=n).map(|t| grid.get(n - t, t)).collect()),
                (face[2], face[0], (0..=n).map(|t| grid.get(0, n - t)).collect()),
            ];
            for (a, b, ids) in sides {
                let (key, ids) = if a < b {
                    ((a, b), ids)
                } else {
                    ((b, a), ids.into_iter().rev().collect())
                };
                match seen.get(&key) {
                    None => {
                        seen.insert(key, ids);
                    }
                    Some(prev) => {
                        if *prev != ids {
                            return Err(Error::Invalid(format!(
                                "patches disagree on shared edge ({}, {})",
                                key.0, key.1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save_srm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = SrmDoc {
            version: 1,
            level: self.level,
            base_vertices: self.base.vertices.iter().map(|p| [p.x, p.y, p.z]).collect(),
            base_faces: self.base.faces.clone(),
            fine_positions: self
                .fine_positions
                .iter()
                .map(|p| [p.x, p.y, p.z])
                .collect(),
            patch_grids: self.patch_grids.iter().map(|g| g.ids.clone()).collect(),
        };
        let json = serde_json::to_string(&doc).map_err(|e| Error::Corrupt(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_srm(path: impl AsRef<Path>) -> Result<SemiRegularMesh> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: SrmDoc =
            serde_json::from_str(&text).map_err(|e| Error::Corrupt(format!("{path:?}: {e}")))?;
        if doc.version != 1 {
            return Err(Error::Version(doc.version));
        }
        if doc.level == 0 {
            return Err(Error::Invalid("srm level must be >= 1".into()));
        }
        let base = TriMesh::new(
            doc.base_vertices
                .iter()
                .map(|c| Point3::new(c[0], c[1], c[2]))
                .collect(),
            doc.base_faces,
        )?;
        let n = 1u32 << doc.level;
        let sr = SemiRegularMesh {
            base,
            level: doc.level,
            fine_positions: doc
                .fine_positions
                .iter()
                .map(|c| Point3::new(c[0], c[1], c[2]))
                .collect(),
            patch_grids: doc
                .patch_grids
                .into_iter()
                .map(|ids| PatchIndexGrid { n, ids })
                .collect(),
        };
        sr.validate()?;
        Ok(sr)
    }
}

#[derive(Serialize, Deserialize)]
struct SrmDoc {
    version: u32,
    level: u32,
    base_vertices: Vec<[f64; 3]>,
    base_faces: Vec<[u32; 3]>,
    fine_positions: Vec<[f64; 3]>,
    patch_grids: Vec<Vec<u32>>,
}

/// Midpoint-subdivides `base` `level` times. Base vertices keep their ids
/// (they become the only possibly-irregular fine vertices); edge and
/// interior lattice points are appended after them, deduplicated across
/// patches.
pub fn subdivide(base: &TriMesh, level: u32) -> Result<SemiRegularMesh> {
    if level == 0 {
        return Err(Error::Invalid("subdivision level must be >= 1".into()));
    }
    let n = 1u32 << level;
    let mut positions: Vec<Point3<f64>> = base.vertices.clone();
    // Key: (min vertex, max vertex, step from min), step in 1..n.
    let mut edge_points: HashMap<(u32, u32, u32), u32> = HashMap::new();
    let mut grids = Vec::with_capacity(base.face_count());

    for face in &base.faces {
        let [c0, c1, c2] = *face;
        let p0 = base.vertices[c0 as usize].coords;
        let p1 = base.vertices[c1 as usize].coords;
        let p2 = base.vertices[c2 as usize].coords;
        let lattice_point = |i: u32, j: u32| {
            let fi = i as f64 / n as f64;
            let fj = j as f64 / n as f64;
            Point3::from(p0 * (1.0 - fi - fj) + p1 * fi + p2 * fj)
        };
        fn edge_id(
            positions: &mut Vec<Point3<f64>>,
            edge_points: &mut HashMap<(u32, u32, u32), u32>,
            a: u32,
            b: u32,
            t: u32,
            n: u32,
            pos: Point3<f64>,
        ) -> u32 {
            let key = if a < b { (a, b, t) } else { (b, a, n - t) };
            *edge_points.entry(key).or_insert_with(|| {
                positions.push(pos);
                (positions.len() - 1) as u32
            })
        }

        let size = ((n + 1) * (n + 2) / 2) as usize;
        let mut ids = vec![0u32; size];
        for j in 0..=n {
            for i in 0..=(n - j) {
                let id = if i == 0 && j == 0 {
                    c0
                } else if i == n && j == 0 {
                    c1
                } else if i == 0 && j == n {
                    c2
                } else if j == 0 {
                    edge_id(&mut positions, &mut edge_points, c0, c1, i, n, lattice_point(i, 0))
                } else if i == 0 {
                    edge_id(&mut positions, &mut edge_points, c0, c2, j, n, lattice_point(0, j))
                } else if i + j == n {
                    edge_id(&mut positions, &mut edge_points, c1, c2, j, n, lattice_point(i, j))
                } else {
                    positions.push(lattice_point(i, j));
                    (positions.len() - 1) as u32
                };
                ids[row_offset(n as usize, j as usize) + i as usize] = id;
            }
        }
        grids.push(PatchIndexGrid { n, ids });
    }

    Ok(SemiRegularMesh {
        base: base.clone(),
        level,
        fine_positions: positions,
        patch_grids: grids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn single_triangle() -> TriMesh {
        TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_level_3_counts() {
        // Lattice count (2^L + 1)(2^L + 2)/2 = 45 vertices, 4^L = 64 faces.
        let sr = subdivide(&single_triangle(), 3).unwrap();
        assert_eq!(sr.fine_positions.len(), 45);
        assert_eq!(sr.fine_faces().len(), 64);
        sr.validate().unwrap();
    }

    #[test]
    fn face_count_multiplicativity() {
        let ico = synth::icosahedron();
        let sr = subdivide(&ico, 3).unwrap();
        assert_eq!(sr.fine_faces().len(), 20 * 64);
    }

    #[test]
    fn icosahedron_level_1_dedup_and_degrees() {
        let sr = subdivide(&synth::icosahedron(), 1).unwrap();
        let fine = sr.fine_mesh();
        // 12 original + 30 edge midpoints = 42 vertices; 80 faces. Edge
        // enumeration confirms dedup: E = V + F - 2 for a closed surface.
        assert_eq!(fine.vertex_count(), 42);
        assert_eq!(fine.face_count(), 80);
        assert_eq!(fine.edges().len(), 120);
        let degree5 = (0..42u32).filter(|&v| fine.vertex_degree(v) == 5).count();
        let degree6 = (0..42u32).filter(|&v| fine.vertex_degree(v) == 6).count();
        assert_eq!(degree5, 12);
        assert_eq!(degree6, 30);
        // Irregular vertices keep base-mesh ids.
        for v in 0..12u32 {
            assert_eq!(fine.vertex_degree(v), 5);
        }
    }

    #[test]
    fn euler_characteristic_preserved() {
        let ico = synth::icosahedron();
        let before = ico.topology_report().euler_characteristic;
        for level in 1..=3 {
            let fine = subdivide(&ico, level).unwrap().fine_mesh();
            assert_eq!(fine.topology_report().euler_characteristic, before);
            assert_eq!(fine.topology_report().non_manifold_edges, 0);
        }
    }

    #[test]
    fn repeated_subdivision_matches_single_pass_topology() {
        // subdivide(a) then subdivide(b) agrees with subdivide(a + b) on
        // topology: counts and degree histograms coincide.
        let ico = synth::icosahedron();
        let once = subdivide(&ico, 1).unwrap().fine_mesh();
        let twice = subdivide(&once, 2).unwrap().fine_mesh();
        let direct = subdivide(&ico, 3).unwrap().fine_mesh();
        assert_eq!(twice.vertex_count(), direct.vertex_count());
        assert_eq!(twice.face_count(), direct.face_count());
        assert_eq!(twice.edges().len(), direct.edges().len());
        let histogram = |m: &TriMesh| {
            let mut h = std::collections::BTreeMap::new();
            for v in 0..m.vertex_count() as u32 {
                *h.entry(m.vertex_degree(v)).or_insert(0usize) += 1;
            }
            h
        };
        assert_eq!(histogram(&twice), histogram(&direct));
    }

    #[test]
    fn srm_round_trip() {
        let sr = subdivide(&synth::icosahedron(), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ico.srm");
        sr.save_srm(&path).unwrap();
        let back = SemiRegularMesh::load_srm(&path).unwrap();
        assert_eq!(back, sr);
    }

    #[test]
    fn srm_rejects_corrupt_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.srm");
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            SemiRegularMesh::load_srm(&path),
            Err(Error::Corrupt(_))
        ));
    }
}
