//! Minibatch Adam training on patch datasets.
//!
//! Augmentation expands the dataset with the two nontrivial patch
//! rotations as distinct entries. Batches are processed in fixed-size
//! chunks that may run in parallel; chunk gradients are reduced in chunk
//! order, so results are bit-identical regardless of the thread schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexnn::{adam_step, AdamState, GridBatch};
use crate::patch::{rotate_patch, PatchGrid};
use crate::rng;

use super::{Autoencoder, LAYER_PARAM_COUNTS, PARAM_COUNT};

/// Samples per parallel work unit; fixed so gradient reduction order does
/// not depend on the machine.
const CHUNK: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub augment: bool,
    pub seed: u64,
    /// Leading fraction of each sequence used for training by the
    /// sequence-level helpers; the remainder is held out.
    pub train_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 100,
            learning_rate: 0.001,
            augment: true,
            seed: 0,
            train_fraction: 0.75,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean interior MSE per epoch.
    pub loss_history: Vec<f64>,
    pub batches_per_epoch: usize,
    /// Dataset size after augmentation.
    pub sample_count: usize,
}

/// Cell-major f32 feature blocks, one per (possibly augmented) sample.
fn prepare_samples(dataset: &[PatchGrid], augment: bool) -> Vec<Vec<f32>> {
    let rotations: &[u32] = if augment { &[0, 1, 2] } else { &[0] };
    let mut samples = Vec::with_capacity(dataset.len() * rotations.len());
    for patch in dataset {
        for &k in rotations {
            let grid = if k == 0 { patch.clone() } else { rotate_patch(patch, k) };
            samples.push(grid.data.iter().map(|&x| x as f32).collect());
        }
    }
    samples
}

fn gather_batch(
    samples: &[Vec<f32>],
    indices: &[usize],
    template: &PatchGrid,
) -> GridBatch<f32> {
    let shape = template.shape.clone();
    let channels = template.channels;
    let batch = indices.len();
    let cells = shape.side * shape.side;
    let mut out = GridBatch::zeros(shape, batch, channels);
    for (b, &sample) in indices.iter().enumerate() {
        let row = &samples[sample];
        for cell in 0..cells {
            for c in 0..channels {
                out.data[(cell * channels + c) * batch + b] = row[cell * channels + c];
            }
        }
    }
    out
}

/// Trains in place. Aborts with diagnostics on a non-finite loss.
/// Deterministic per `cfg.seed`.
pub fn train(
    model: &mut Autoencoder<f32>,
    dataset: &[PatchGrid],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Invalid("epochs and batch size must be >= 1".into()));
    }
    let samples = prepare_samples(dataset, cfg.augment);
    let template = &dataset[0];
    let n = samples.len();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let mut state = AdamState::new(PARAM_COUNT, cfg.learning_rate as f32);
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = rng::stream(cfg.seed, "shuffle", epoch as u64);
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0f64;
        for (batch_idx, batch_indices) in order.chunks(cfg.batch_size).enumerate() {
            let batch_n = batch_indices.len();
            let chunk_results: Vec<(f32, Vec<f32>)> = batch_indices
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let x = gather_batch(&samples, chunk, template);
                    let (loss, grads) = model
                        .loss_and_grad(&x, &x)
                        .expect("batch shapes are consistent");
                    (loss, grads)
                })
                .collect();
            let mut grads = vec![0.0f32; PARAM_COUNT];
            let mut batch_loss = 0.0f64;
            for (chunk, (loss, chunk_grads)) in
                batch_indices.chunks(CHUNK).zip(&chunk_results)
            {
                let weight = chunk.len() as f32 / batch_n as f32;
                batch_loss += *loss as f64 * chunk.len() as f64 / batch_n as f64;
                for (g, &cg) in grads.iter_mut().zip(chunk_grads) {
                    *g += weight * cg;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NanLoss {
                    epoch,
                    batch: batch_idx,
                    norms: layer_weight_norms(model),
                });
            }
            adam_step(&mut model.params, &grads, &mut state);
            epoch_loss += batch_loss * batch_n as f64;
        }
        loss_history.push(epoch_loss / n as f64);
    }

    Ok(TrainReport {
        loss_history,
        batches_per_epoch,
        sample_count: n,
    })
}

fn layer_weight_norms(model: &Autoencoder<f32>) -> Vec<f64> {
    let mut norms = Vec::with_capacity(LAYER_PARAM_COUNTS.len());
    let mut offset = 0;
    for &count in &LAYER_PARAM_COUNTS {
        let block = &model.params[offset..offset + count];
        norms.push(block.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt());
        offset += count;
    }
    norms
}

/// Mean interior MSE of the model over a set of patches, without touching
/// parameters. Runs in deterministic chunks like training.
pub fn mean_interior_mse(model: &Autoencoder<f32>, patches: &[PatchGrid]) -> Result<f64> {
    if patches.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let refs: Vec<&PatchGrid> = patches.iter().collect();
    let losses: Vec<(usize, f64)> = refs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let x = GridBatch::<f32>::from_patches(chunk);
            let cache = model.forward(&x).expect("consistent shapes");
            let (loss, _) = crate::hexnn::mse_interior(&cache.output, &x).expect("same shape");
            (chunk.len(), loss as f64)
        })
        .collect();
    let total: f64 = losses.iter().map(|(k, l)| *k as f64 * l).sum();
    Ok(total / patches.len() as f64)
}
