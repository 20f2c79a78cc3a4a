//! The fixed patch autoencoder: two hexagonal convolutions with pooling
//! down to an 8-dimensional latent per patch, mirrored by dense, unpool,
//! and convolution layers on the way back up. 18184 trainable scalars.

mod checkpoint;
mod embed;
mod reconstruct;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest};
pub use embed::{concat_latents, embed_sequence, pca_project, EmbeddingMatrix, PcaResult};
pub use reconstruct::{autoencode_patches, encode_patches, reconstruct_sequence, FrameReconstruction};
pub use train::{mean_interior_mse, train, TrainConfig, TrainReport};

use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hexnn::{
    avg_pool, avg_pool_backward, avg_unpool, avg_unpool_backward, dense_backward, dense_forward,
    glorot_uniform, mse_interior, relu_backward, relu_forward, Dense, GridBatch, HexConv, Real,
};
use crate::patch::{grid_shape, GridShape, PatchGrid};
use crate::rng;

/// Total trainable scalars.
pub const PARAM_COUNT: usize = 18184;
/// Latent dimension per patch.
pub const LATENT_DIM: usize = 8;
/// Flattened size of the bottom grid: full 3x3 storage times 32 channels
/// (the three invalid cells are zeroed, matching the dense layer sizes).
const BOTTLENECK: usize = 288;

/// Per-layer parameter counts in parameter-blob order.
pub const LAYER_PARAM_COUNTS: [usize; 7] = [912, 3584, 2312, 2592, 3584, 4864, 336];

const ARCH_DESCRIPTION: &str = "hexconv r2 3->16 @(3,2); relu; pool; hexconv r1 16->32 @(2,1); \
     relu; pool; dense 288->8; dense 8->288; unpool; hexconv r1 32->16 @(2,1); relu; unpool; \
     hexconv r2 16->16 @(3,2); relu; hexconv r1 16->3 @(3,2); params f32 le out-in-tap order";

/// Hex digest identifying the fixed layer stack; checkpoints must match.
pub fn architecture_fingerprint() -> String {
    let mut hasher = Sha256::new();
    hasher.update(ARCH_DESCRIPTION.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The autoencoder with a flat parameter vector in frozen layer order.
#[derive(Debug, Clone)]
pub struct Autoencoder<T: Real> {
    pub params: Vec<T>,
    conv_enc1: HexConv,
    conv_enc2: HexConv,
    dense_enc: Dense,
    dense_dec: Dense,
    conv_dec1: HexConv,
    conv_dec2: HexConv,
    conv_dec3: HexConv,
    bottom: Arc<GridShape>,
}

/// Builds the autoencoder with Glorot-uniform weights and zero biases,
/// deterministic per seed.
pub fn build_autoencoder(seed: u64) -> Autoencoder<f32> {
    let mut model = Autoencoder::<f32>::zeroed();
    let mut offset = 0usize;
    for (layer, &count) in LAYER_PARAM_COUNTS.iter().enumerate() {
        let mut rng = rng::stream(seed, "init", layer as u64);
        let block = &mut model.params[offset..offset + count];
        match layer {
            0 => glorot_uniform(block, 3 * 19, 16 * 19, &mut rng),
            1 => glorot_uniform(block, 16 * 7, 32 * 7, &mut rng),
            2 => {
                let (w, b) = block.split_at_mut(BOTTLENECK * LATENT_DIM);
                glorot_uniform(w, BOTTLENECK, LATENT_DIM, &mut rng);
                b.fill(0.0);
            }
            3 => {
                let (w, b) = block.split_at_mut(LATENT_DIM * BOTTLENECK);
                glorot_uniform(w, LATENT_DIM, BOTTLENECK, &mut rng);
                b.fill(0.0);
            }
            4 => glorot_uniform(block, 32 * 7, 16 * 7, &mut rng),
            5 => glorot_uniform(block, 16 * 19, 16 * 19, &mut rng),
            6 => glorot_uniform(block, 16 * 7, 3 * 7, &mut rng),
            _ => unreachable!(),
        }
        offset += count;
    }
    model
}

/// Activations cached by the forward pass for the backward pass.
pub struct ForwardCache<T: Real> {
    input: GridBatch<T>,
    a1: GridBatch<T>,
    p1: GridBatch<T>,
    a2: GridBatch<T>,
    flat: Vec<T>,
    latents: Vec<T>,
    u: GridBatch<T>,
    v1: GridBatch<T>,
    a3: GridBatch<T>,
    v2: GridBatch<T>,
    a4: GridBatch<T>,
    pub output: GridBatch<T>,
}

impl<T: Real> Autoencoder<T> {
    /// All-zero parameters; useful as a deterministic blank slate.
    pub fn zeroed() -> Self {
        Autoencoder {
            params: vec![T::default(); PARAM_COUNT],
            conv_enc1: HexConv {
                radius: 2,
                in_channels: 3,
                out_channels: 16,
            },
            conv_enc2: HexConv {
                radius: 1,
                in_channels: 16,
                out_channels: 32,
            },
            dense_enc: Dense {
                in_features: BOTTLENECK,
                out_features: LATENT_DIM,
            },
            dense_dec: Dense {
                in_features: LATENT_DIM,
                out_features: BOTTLENECK,
            },
            conv_dec1: HexConv {
                radius: 1,
                in_channels: 32,
                out_channels: 16,
            },
            conv_dec2: HexConv {
                radius: 2,
                in_channels: 16,
                out_channels: 16,
            },
            conv_dec3: HexConv {
                radius: 1,
                in_channels: 16,
                out_channels: 3,
            },
            bottom: grid_shape(1, 0),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn layer_param_counts(&self) -> [usize; 7] {
        LAYER_PARAM_COUNTS
    }

    pub fn fingerprint(&self) -> String {
        architecture_fingerprint()
    }

    fn offsets() -> [usize; 8] {
        let mut offsets = [0usize; 8];
        for (k, &count) in LAYER_PARAM_COUNTS.iter().enumerate() {
            offsets[k + 1] = offsets[k] + count;
        }
        offsets
    }

    fn layer_params(&self, layer: usize) -> &[T] {
        let offsets = Self::offsets();
        &self.params[offsets[layer]..offsets[layer + 1]]
    }

    fn check_input(&self, x: &GridBatch<T>) -> Result<()> {
        if x.shape.level != 3 || x.shape.pad != 2 {
            return Err(Error::LayoutMismatch {
                expected_level: 3,
                expected_pad: 2,
                level: x.shape.level,
                pad: x.shape.pad,
            });
        }
        if x.channels != 3 {
            return Err(Error::ChannelMismatch {
                expected: 3,
                got: x.channels,
            });
        }
        Ok(())
    }

    /// Flattens a bottom-shape grid batch to `[b][cell * channels + c]`.
    fn flatten(&self, g: &GridBatch<T>) -> Vec<T> {
        let cells = self.bottom.side * self.bottom.side;
        let batch = g.batch;
        let mut out = vec![T::default(); batch * cells * g.channels];
        for cell in 0..cells {
            for c in 0..g.channels {
                for b in 0..batch {
                    out[b * cells * g.channels + cell * g.channels + c] =
                        g.data[(cell * g.channels + c) * batch + b];
                }
            }
        }
        out
    }

    /// Inverse of [`Self::flatten`]; zeroes the invalid storage cells.
    fn unflatten(&self, flat: &[T], batch: usize) -> GridBatch<T> {
        let cells = self.bottom.side * self.bottom.side;
        let channels = BOTTLENECK / cells;
        let mut g = GridBatch::zeros(self.bottom.clone(), batch, channels);
        for cell in 0..cells {
            if !self.bottom.valid[cell] {
                continue;
            }
            for c in 0..channels {
                for b in 0..batch {
                    g.data[(cell * channels + c) * batch + b] =
                        flat[b * cells * channels + cell * channels + c];
                }
            }
        }
        g
    }

    /// Full forward pass, returning every activation needed for backward.
    pub fn forward(&self, x: &GridBatch<T>) -> Result<ForwardCache<T>> {
        self.check_input(x)?;
        let batch = x.batch;
        let z1 = self.conv_enc1.forward(x, self.layer_params(0))?;
        let a1 = relu_forward(&z1);
        let p1 = avg_pool(&a1)?;
        let z2 = self.conv_enc2.forward(&p1, self.layer_params(1))?;
        let a2 = relu_forward(&z2);
        let p2 = avg_pool(&a2)?;
        let flat = self.flatten(&p2);
        let latents = dense_forward(&self.dense_enc, &flat, batch, self.layer_params(2));
        let g = dense_forward(&self.dense_dec, &latents, batch, self.layer_params(3));
        let u = self.unflatten(&g, batch);
        let v1 = avg_unpool(&u, 1)?;
        let z3 = self.conv_dec1.forward(&v1, self.layer_params(4))?;
        let a3 = relu_forward(&z3);
        let v2 = avg_unpool(&a3, 2)?;
        let z4 = self.conv_dec2.forward(&v2, self.layer_params(5))?;
        let a4 = relu_forward(&z4);
        let output = self.conv_dec3.forward(&a4, self.layer_params(6))?;
        Ok(ForwardCache {
            input: x.clone(),
            a1,
            p1,
            a2,
            flat,
            latents,
            u,
            v1,
            a3,
            v2,
            a4,
            output,
        })
    }

    /// Backward pass from a gradient on the output grid; returns the flat
    /// parameter gradient.
    pub fn backward(&self, cache: &ForwardCache<T>, doutput: &GridBatch<T>) -> Result<Vec<T>> {
        let offsets = Self::offsets();
        let mut grads = vec![T::default(); PARAM_COUNT];
        let batch = cache.input.batch;
        let slice = |layer: usize| offsets[layer]..offsets[layer + 1];

        let r6 = slice(6);
        let da4 = self
            .conv_dec3
            .backward(&cache.a4, self.layer_params(6), doutput, &mut grads[r6], true)?
            .unwrap();
        let dz4 = relu_backward(&cache.a4, &da4);
        let r5 = slice(5);
        let dv2 = self
            .conv_dec2
            .backward(&cache.v2, self.layer_params(5), &dz4, &mut grads[r5], true)?
            .unwrap();
        let da3 = avg_unpool_backward(&cache.a3, 2, &dv2)?;
        let dz3 = relu_backward(&cache.a3, &da3);
        let r4 = slice(4);
        let dv1 = self
            .conv_dec1
            .backward(&cache.v1, self.layer_params(4), &dz3, &mut grads[r4], true)?
            .unwrap();
        let du = avg_unpool_backward(&cache.u, 1, &dv1)?;
        let dg = self.flatten(&du);
        let r3 = slice(3);
        let dlat = dense_backward(
            &self.dense_dec,
            &cache.latents,
            batch,
            self.layer_params(3),
            &dg,
            &mut grads[r3],
        );
        let r2 = slice(2);
        let dflat = dense_backward(
            &self.dense_enc,
            &cache.flat,
            batch,
            self.layer_params(2),
            &dlat,
            &mut grads[r2],
        );
        let dp2 = self.unflatten(&dflat, batch);
        let da2 = avg_pool_backward(&cache.a2, &dp2)?;
        let dz2 = relu_backward(&cache.a2, &da2);
        let r1 = slice(1);
        let dp1 = self
            .conv_enc2
            .backward(&cache.p1, self.layer_params(1), &dz2, &mut grads[r1], true)?
            .unwrap();
        let da1 = avg_pool_backward(&cache.a1, &dp1)?;
        let dz1 = relu_backward(&cache.a1, &da1);
        let r0 = slice(0);
        self.conv_enc1
            .backward(&cache.input, self.layer_params(0), &dz1, &mut grads[r0], false)?;
        Ok(grads)
    }

    /// Interior reconstruction loss against `target` plus the parameter
    /// gradient, for one batch.
    pub fn loss_and_grad(&self, x: &GridBatch<T>, target: &GridBatch<T>) -> Result<(T, Vec<T>)> {
        let cache = self.forward(x)?;
        let (loss, dout) = mse_interior(&cache.output, target)?;
        let grads = self.backward(&cache, &dout)?;
        Ok((loss, grads))
    }

    /// Per-patch latent codes for a batch, row-major `[b][8]`.
    pub fn encode_batch(&self, x: &GridBatch<T>) -> Result<Vec<T>> {
        self.check_input(x)?;
        let batch = x.batch;
        let z1 = self.conv_enc1.forward(x, self.layer_params(0))?;
        let a1 = relu_forward(&z1);
        let p1 = avg_pool(&a1)?;
        let z2 = self.conv_enc2.forward(&p1, self.layer_params(1))?;
        let a2 = relu_forward(&z2);
        let p2 = avg_pool(&a2)?;
        let flat = self.flatten(&p2);
        Ok(dense_forward(&self.dense_enc, &flat, batch, self.layer_params(2)))
    }

    /// Decodes latent codes (row-major `[b][8]`) back to patch grids.
    pub fn decode_batch(&self, latents: &[T], batch: usize) -> Result<GridBatch<T>> {
        if latents.len() != batch * LATENT_DIM {
            return Err(Error::ShapeMismatch(format!(
                "latent block {} != batch {batch} x {LATENT_DIM}",
                latents.len()
            )));
        }
        let g = dense_forward(&self.dense_dec, latents, batch, self.layer_params(3));
        let u = self.unflatten(&g, batch);
        let v1 = avg_unpool(&u, 1)?;
        let z3 = self.conv_dec1.forward(&v1, self.layer_params(4))?;
        let a3 = relu_forward(&z3);
        let v2 = avg_unpool(&a3, 2)?;
        let z4 = self.conv_dec2.forward(&v2, self.layer_params(5))?;
        let a4 = relu_forward(&z4);
        self.conv_dec3.forward(&a4, self.layer_params(6))
    }

    /// Encodes a single extracted patch.
    pub fn encode(&self, patch: &PatchGrid) -> Result<Vec<T>> {
        let batch = GridBatch::from_patches(&[patch]);
        self.encode_batch(&batch)
    }

    /// Decodes a single latent vector into a patch-shaped grid batch.
    pub fn decode(&self, latent: &[T]) -> Result<GridBatch<T>> {
        self.decode_batch(latent, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::{build_layout, extract_patches};
    use crate::remesh::subdivide;
    use crate::synth;
    use rand::Rng;

    #[test]
    fn parameter_counts_match_architecture() {
        let model = build_autoencoder(0);
        assert_eq!(model.param_count(), 18184);
        assert_eq!(
            model.layer_param_counts(),
            [912, 3584, 2312, 2592, 3584, 4864, 336]
        );
        assert_eq!(LAYER_PARAM_COUNTS.iter().sum::<usize>(), PARAM_COUNT);
        // Cross-check each block against the layer formulas.
        assert_eq!(16 * 3 * 19, 912);
        assert_eq!(32 * 16 * 7, 3584);
        assert_eq!(288 * 8 + 8, 2312);
        assert_eq!(8 * 288 + 288, 2592);
        assert_eq!(16 * 32 * 7, 3584);
        assert_eq!(16 * 16 * 19, 4864);
        assert_eq!(3 * 16 * 7, 336);
    }

    #[test]
    fn init_is_deterministic_and_biases_zero() {
        let a = build_autoencoder(42);
        let b = build_autoencoder(42);
        assert_eq!(a.params, b.params);
        let c = build_autoencoder(43);
        assert_ne!(a.params, c.params);
        // Encoder dense bias block is zero.
        let offsets = Autoencoder::<f32>::offsets();
        let bias = &a.params[offsets[2] + 288 * 8..offsets[3]];
        assert!(bias.iter().all(|&x| x == 0.0));
    }

    fn sphere_batch() -> GridBatch<f32> {
        let sr = subdivide(&synth::icosahedron(), 3).unwrap();
        let (norm, _) = sr.fine_mesh().normalize_unit_cube().unwrap();
        let layout = build_layout(&sr, 2).unwrap();
        let patches = extract_patches(&sr, &layout, &norm.vertices).unwrap();
        let refs: Vec<&PatchGrid> = patches.iter().collect();
        GridBatch::from_patches(&refs)
    }

    #[test]
    fn forward_shapes_follow_the_table() {
        let model = build_autoencoder(1);
        let x = sphere_batch();
        let cache = model.forward(&x).unwrap();
        assert_eq!(cache.input.shape.valid_count, 111);
        assert_eq!(cache.a1.channels, 16);
        assert_eq!(cache.p1.shape.valid_count, 33);
        assert_eq!(cache.a2.channels, 32);
        assert_eq!(cache.latents.len(), x.batch * 8);
        assert_eq!(cache.v1.shape.valid_count, 33);
        assert_eq!(cache.a3.channels, 16);
        assert_eq!(cache.v2.shape.valid_count, 111);
        assert_eq!(cache.output.channels, 3);
        assert_eq!(cache.output.shape.valid_count, 111);
        for &v in &cache.output.data {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn encode_is_deterministic_and_decode_finite() {
        let model = build_autoencoder(2);
        let x = sphere_batch();
        let a = model.encode_batch(&x).unwrap();
        let b = model.encode_batch(&x).unwrap();
        assert_eq!(a, b);
        let decoded = model.decode_batch(&a, x.batch).unwrap();
        assert!(decoded.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_params_give_finite_roundtrip() {
        let model = Autoencoder::<f32>::zeroed();
        let x = sphere_batch();
        let latents = model.encode_batch(&x).unwrap();
        assert!(latents.iter().all(|v| v.is_finite()));
        let out = model.decode_batch(&latents, x.batch).unwrap();
        assert!(out.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn full_stack_gradient_matches_finite_differences() {
        // f64 instance of the entire autoencoder against central
        // differences on a handful of parameters from every layer.
        let mut model = Autoencoder::<f64>::zeroed();
        let mut rng = crate::rng::stream(5, "model-fd", 0);
        for p in &mut model.params {
            *p = 0.2 * (rng.gen::<f64>() - 0.5);
        }
        let shape = grid_shape(3, 2);
        let mut x = GridBatch::<f64>::zeros(shape.clone(), 2, 3);
        for &cell in &shape.valid_cells {
            for c in 0..3 {
                for b in 0..2 {
                    x.data[(cell as usize * 3 + c) * 2 + b] = rng.gen::<f64>() - 0.5;
                }
            }
        }
        let target = x.clone();
        let (_, grads) = model.loss_and_grad(&x, &target).unwrap();
        let offsets = Autoencoder::<f64>::offsets();
        let h = 1e-5;
        let mut checked = 0;
        for layer in 0..7 {
            for k in [0usize, 7, LAYER_PARAM_COUNTS[layer] - 1] {
                let idx = offsets[layer] + k;
                let orig = model.params[idx];
                model.params[idx] = orig + h;
                let (lp, _) = model.loss_and_grad(&x, &target).unwrap();
                model.params[idx] = orig - h;
                let (lm, _) = model.loss_and_grad(&x, &target).unwrap();
                model.params[idx] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let rel = (grads[idx] - fd).abs() / grads[idx].abs().max(fd.abs()).max(1e-8);
                assert!(
                    rel < 1e-4,
                    "layer {layer} param {k}: analytic {} vs fd {fd}",
                    grads[idx]
                );
                checked += 1;
            }
        }
        assert_eq!(checked, 21);
    }

    #[test]
    fn wrong_layout_rejected() {
        let model = build_autoencoder(0);
        let bad = GridBatch::<f32>::zeros(grid_shape(2, 1), 1, 3);
        assert!(matches!(
            model.forward(&bad),
            Err(Error::LayoutMismatch { .. })
        ));
        let bad_channels = GridBatch::<f32>::zeros(grid_shape(3, 2), 1, 4);
        assert!(matches!(
            model.forward(&bad_channels),
            Err(Error::ChannelMismatch { .. })
        ));
    }
}
