//! Full-pipeline reconstruction of semi-regular mesh sequences.

use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hexnn::GridBatch;
use crate::patch::{assemble_positions, build_layout, extract_patches, PatchGrid};
use crate::remesh::SemiRegularMesh;

use super::{Autoencoder, LATENT_DIM};

/// One frame's reconstruction: denormalized positions, per-fine-face
/// error map, and the two error summaries on normalized coordinates.
#[derive(Debug, Clone)]
pub struct FrameReconstruction {
    pub positions: Vec<Point3<f64>>,
    /// Per fine face: mean squared vertex error over its three corners
    /// (normalized coordinates).
    pub per_face_error: Vec<f64>,
    /// Mean interior-cell MSE across the frame's patches (the training
    /// objective, on normalized coordinates).
    pub interior_mse: f64,
    /// Mean squared per-coordinate error over assembled fine vertices.
    pub vertex_mse: f64,
}

const CHUNK: usize = 50;

/// Runs extract -> encode -> decode -> assemble on each frame. Frames may
/// have any patch count but must be at the model's level and pad.
pub fn reconstruct_sequence(
    model: &Autoencoder<f32>,
    frames: &[SemiRegularMesh],
    pad: u32,
) -> Result<Vec<FrameReconstruction>> {
    frames
        .iter()
        .map(|frame| reconstruct_frame(model, frame, pad))
        .collect()
}

/// Encodes and decodes a set of patches in deterministic chunks.
pub fn autoencode_patches(
    model: &Autoencoder<f32>,
    patches: &[PatchGrid],
) -> Result<Vec<PatchGrid>> {
    let decoded: Vec<Vec<PatchGrid>> = patches
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<Vec<PatchGrid>> {
            let refs: Vec<&PatchGrid> = chunk.iter().collect();
            let x = GridBatch::<f32>::from_patches(&refs);
            let latents = model.encode_batch(&x)?;
            let out = model.decode_batch(&latents, chunk.len())?;
            Ok(chunk
                .iter()
                .enumerate()
                .map(|(b, source)| PatchGrid {
                    shape: source.shape.clone(),
                    base_face: source.base_face,
                    channels: source.channels,
                    data: out.sample_to_f64(b),
                    patch_mean: source.patch_mean,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(decoded.into_iter().flatten().collect())
}

/// Per-patch latents for one frame, ascending base-face order, flattened.
pub fn encode_patches(model: &Autoencoder<f32>, patches: &[PatchGrid]) -> Result<Vec<f64>> {
    let latents: Vec<Vec<f64>> = patches
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<Vec<f64>> {
            let refs: Vec<&PatchGrid> = chunk.iter().collect();
            let x = GridBatch::<f32>::from_patches(&refs);
            Ok(model
                .encode_batch(&x)?
                .iter()
                .map(|&v| v as f64)
                .collect())
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = latents.into_iter().flatten().collect();
    debug_assert_eq!(flat.len(), patches.len() * LATENT_DIM);
    Ok(flat)
}

fn reconstruct_frame(
    model: &Autoencoder<f32>,
    frame: &SemiRegularMesh,
    pad: u32,
) -> Result<FrameReconstruction> {
    if frame.level != 3 || pad != 2 {
        return Err(Error::LayoutMismatch {
            expected_level: 3,
            expected_pad: 2,
            level: frame.level,
            pad,
        });
    }
    let fine = frame.fine_mesh();
    let (normalized, transform) = fine.normalize_unit_cube()?;
    let layout = build_layout(frame, pad)?;
    let patches = extract_patches(frame, &layout, &normalized.vertices)?;
    let decoded = autoencode_patches(model, &patches)?;

    let interior_mse = patches
        .iter()
        .zip(&decoded)
        .map(|(a, b)| a.interior_mse(b))
        .sum::<f64>()
        / patches.len() as f64;

    let assembled = assemble_positions(&decoded, &layout, frame)?;
    let mut vertex_sq = vec![0.0f64; assembled.len()];
    let mut vertex_total = 0.0f64;
    for (v, (a, b)) in assembled.iter().zip(&normalized.vertices).enumerate() {
        let d2 = (a - b).norm_squared();
        vertex_sq[v] = d2;
        vertex_total += d2;
    }
    // Mean squared per-coordinate error.
    let vertex_mse = vertex_total / (assembled.len() as f64 * 3.0);

    let per_face_error = fine
        .faces
        .iter()
        .map(|f| f.iter().map(|&v| vertex_sq[v as usize]).sum::<f64>() / 3.0)
        .collect();

    let positions = assembled.iter().map(|p| transform.invert(p)).collect();
    Ok(FrameReconstruction {
        positions,
        per_face_error,
        interior_mse,
        vertex_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_autoencoder, train, TrainConfig};
    use crate::remesh::subdivide;
    use crate::synth;

    #[test]
    fn untrained_model_is_worse_than_trained() {
        let sr = subdivide(&synth::icosahedron(), 3).unwrap();
        let frames = vec![sr.clone()];
        let untrained = build_autoencoder(0);
        let before = reconstruct_sequence(&untrained, &frames, 2).unwrap()[0].interior_mse;

        let (norm, _) = sr.fine_mesh().normalize_unit_cube().unwrap();
        let layout = build_layout(&sr, 2).unwrap();
        let patches = extract_patches(&sr, &layout, &norm.vertices).unwrap();
        let mut model = build_autoencoder(0);
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 20,
            learning_rate: 0.005,
            augment: false,
            seed: 0,
            train_fraction: 1.0,
        };
        train(&mut model, &patches, &cfg).unwrap();
        let after = reconstruct_sequence(&model, &frames, 2).unwrap()[0].interior_mse;
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn patch_count_independence() {
        // A model built for one mesh runs unchanged on a mesh with a
        // different patch count, and patch results are independent.
        let model = build_autoencoder(5);
        let ico = subdivide(&synth::icosahedron(), 3).unwrap();
        let octa = subdivide(&synth::octahedron(), 3).unwrap();
        let r1 = reconstruct_sequence(&model, &[ico.clone()], 2).unwrap();
        let r2 = reconstruct_sequence(&model, &[octa], 2).unwrap();
        assert!(r1[0].interior_mse.is_finite());
        assert!(r2[0].interior_mse.is_finite());

        // Reconstructing a subset of patches yields identical values.
        let (norm, _) = ico.fine_mesh().normalize_unit_cube().unwrap();
        let layout = build_layout(&ico, 2).unwrap();
        let patches = extract_patches(&ico, &layout, &norm.vertices).unwrap();
        let full = autoencode_patches(&model, &patches).unwrap();
        let subset = autoencode_patches(&model, &patches[3..9]).unwrap();
        for (a, b) in full[3..9].iter().zip(&subset) {
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn wrong_level_rejected() {
        let model = build_autoencoder(0);
        let sr = subdivide(&synth::icosahedron(), 2).unwrap();
        assert!(matches!(
            reconstruct_sequence(&model, &[sr], 2),
            Err(Error::LayoutMismatch { .. })
        ));
    }
}
