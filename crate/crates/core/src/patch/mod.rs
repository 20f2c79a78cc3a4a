//! Regional patches: padded hexagonal-lattice feature grids extracted per
//! base face, plus their inverse assembly back into fine positions.

mod io;
mod layout;
mod shape;

pub use io::{load_patch_dataset, save_patch_dataset};
pub use layout::{build_layout, CellSource, PatchLayout};
pub use shape::{closed_form_valid_count, grid_shape, tap_count, tap_offsets, GridShape};

use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::remesh::SemiRegularMesh;

/// One base face's feature grid: dense square storage in axial
/// coordinates, three channels (coordinates) per cell, invalid cells held
/// at zero, and the recorded interior mean removed from every valid cell.
#[derive(Debug, Clone)]
pub struct PatchGrid {
    pub shape: Arc<GridShape>,
    pub base_face: u32,
    pub channels: usize,
    /// Cell-major storage: `data[cell * channels + c]`.
    pub data: Vec<f64>,
    pub patch_mean: Vector3<f64>,
}

impl PartialEq for PatchGrid {
    fn eq(&self, other: &Self) -> bool {
        self.shape.level == other.shape.level
            && self.shape.pad == other.shape.pad
            && self.base_face == other.base_face
            && self.channels == other.channels
            && self.data == other.data
            && self.patch_mean == other.patch_mean
    }
}

impl PatchGrid {
    pub fn cell(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.channels..(idx + 1) * self.channels]
    }

    /// Mean feature vector over interior cells.
    pub fn interior_mean(&self) -> Vector3<f64> {
        let mut mean = Vector3::zeros();
        for &idx in &self.shape.interior_cells {
            let cell = self.cell(idx as usize);
            mean += Vector3::new(cell[0], cell[1], cell[2]);
        }
        mean / self.shape.interior_count as f64
    }

    /// Mean squared difference over interior cells and channels.
    pub fn interior_mse(&self, other: &PatchGrid) -> f64 {
        assert_eq!(self.shape.valid_count, other.shape.valid_count);
        let mut sum = 0.0;
        for &idx in &self.shape.interior_cells {
            let a = self.cell(idx as usize);
            let b = other.cell(idx as usize);
            for (x, y) in a.iter().zip(b) {
                sum += (x - y) * (x - y);
            }
        }
        sum / (self.shape.interior_count * self.channels) as f64
    }
}

/// Fills every patch from normalized fine-vertex positions according to
/// `layout`, then translates each patch so its interior cells have zero
/// mean (the removed mean is recorded in `patch_mean`).
pub fn extract_patches(
    sr: &SemiRegularMesh,
    layout: &PatchLayout,
    positions: &[Point3<f64>],
) -> Result<Vec<PatchGrid>> {
    if positions.len() != sr.fine_positions.len() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} positions, got {}",
            sr.fine_positions.len(),
            positions.len()
        )));
    }
    let shape = &layout.shape;
    let channels = 3usize;
    let mut patches = Vec::with_capacity(layout.cells.len());
    for (face, sources) in layout.cells.iter().enumerate() {
        let mut data = vec![0.0f64; shape.side * shape.side * channels];
        let mut filled = vec![false; shape.side * shape.side];
        let mut pending: Vec<usize> = Vec::new();
        for &idx in &shape.valid_cells {
            let idx = idx as usize;
            match sources[idx].expect("valid cell has a source") {
                CellSource::Vertex(v) | CellSource::Replicate(v) => {
                    let p = positions[v as usize];
                    data[idx * channels] = p.x;
                    data[idx * channels + 1] = p.y;
                    data[idx * channels + 2] = p.z;
                    filled[idx] = true;
                }
                CellSource::Interpolate => pending.push(idx),
            }
        }
        // Jacobi sweeps: every unfilled cell takes the mean of its filled
        // valid lattice neighbors from the previous sweep.
        let neighbor_offsets = tap_offsets(1);
        for _sweep in 0..10 {
            if pending.is_empty() {
                break;
            }
            let snapshot = filled.clone();
            let mut still_pending = Vec::new();
            let mut updates: Vec<(usize, [f64; 3])> = Vec::new();
            for &idx in &pending {
                let (i, j) = shape.coords_of(idx);
                let mut acc = [0.0f64; 3];
                let mut count = 0usize;
                for &(di, dj) in neighbor_offsets.iter().skip(1) {
                    if let Some(nb) = shape.index_of(i + di, j + dj) {
                        if shape.valid[nb] && snapshot[nb] {
                            for c in 0..3 {
                                acc[c] += data[nb * channels + c];
                            }
                            count += 1;
                        }
                    }
                }
                if count > 0 {
                    for item in &mut acc {
                        *item /= count as f64;
                    }
                    updates.push((idx, acc));
                } else {
                    still_pending.push(idx);
                }
            }
            for (idx, value) in updates {
                for c in 0..3 {
                    data[idx * channels + c] = value[c];
                }
                filled[idx] = true;
            }
            pending = still_pending;
        }
        if let Some(&idx) = pending.first() {
            let (i, j) = shape.coords_of(idx);
            return Err(Error::InterpolationStalled { patch: face, i, j });
        }

        let mut grid = PatchGrid {
            shape: shape.clone(),
            base_face: face as u32,
            channels,
            data,
            patch_mean: Vector3::zeros(),
        };
        let mean = grid.interior_mean();
        for &idx in &shape.valid_cells {
            let idx = idx as usize;
            for c in 0..3 {
                grid.data[idx * channels + c] -= mean[c];
            }
        }
        grid.patch_mean = mean;
        patches.push(grid);
    }
    Ok(patches)
}

/// Rotates the padded grid by `k` 120-degree steps: the barycentric index
/// permutation `(i, j, k) -> (k, i, j)` applied to every valid cell.
pub fn rotate_patch(grid: &PatchGrid, k: u32) -> PatchGrid {
    let k = k % 3;
    if k == 0 {
        return grid.clone();
    }
    let map = grid.shape.rotation_map();
    let mut out = grid.clone();
    let mut source = grid.data.clone();
    for _ in 0..k {
        let mut rotated = vec![0.0f64; source.len()];
        for &(src, dst) in &map {
            for c in 0..grid.channels {
                rotated[dst as usize * grid.channels + c] =
                    source[src as usize * grid.channels + c];
            }
        }
        source = rotated;
    }
    out.data = source;
    out
}

/// Reassembles fine-vertex positions from decoded grids: each fine vertex
/// takes the mean over all patches whose interior contains it of the
/// decoded cell plus that patch's recorded mean. Pad cells are ignored.
/// Accumulation runs in patch order, so results are schedule-independent.
pub fn assemble_positions(
    decoded: &[PatchGrid],
    layout: &PatchLayout,
    sr: &SemiRegularMesh,
) -> Result<Vec<Point3<f64>>> {
    if decoded.len() != layout.cells.len() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} decoded patches, got {}",
            layout.cells.len(),
            decoded.len()
        )));
    }
    let shape = &layout.shape;
    let mut accum = vec![Vector3::<f64>::zeros(); sr.fine_positions.len()];
    let mut counts = vec![0u32; sr.fine_positions.len()];
    for (face, grid) in decoded.iter().enumerate() {
        if !Arc::ptr_eq(&grid.shape, shape) && grid.shape.valid_count != shape.valid_count {
            return Err(Error::LayoutMismatch {
                expected_level: shape.level,
                expected_pad: shape.pad,
                level: grid.shape.level,
                pad: grid.shape.pad,
            });
        }
        let index_grid = &sr.patch_grids[face];
        for &idx in &shape.interior_cells {
            let idx = idx as usize;
            let (i, j) = shape.coords_of(idx);
            let v = index_grid.get(i as u32, j as u32) as usize;
            let cell = grid.cell(idx);
            accum[v] += Vector3::new(cell[0], cell[1], cell[2]) + grid.patch_mean;
            counts[v] += 1;
        }
    }
    Ok(accum
        .into_iter()
        .zip(counts)
        .map(|(sum, count)| {
            debug_assert!(count > 0, "every fine vertex lies in some patch interior");
            Point3::from(sum / count.max(1) as f64)
        })
        .collect())
}
