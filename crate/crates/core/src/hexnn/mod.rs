//! Numerical layers on padded hexagonal patch grids: convolution,
//! hierarchy pooling/unpooling, dense layers, ReLU, interior MSE, and an
//! Adam optimizer. Forward and backward passes are analytic and generic
//! over `f32`/`f64`; training runs in 32-bit, gradient checks run the same
//! code paths in 64-bit.

mod adam;
mod conv;
mod dense;
mod init;
mod pool;
mod tables;

pub use adam::{adam_step, AdamState};
pub use conv::{hexconv_backward, hexconv_forward, HexConv, HexKernel};
pub use dense::{
    dense_backward, dense_forward, mse_interior, relu_backward, relu_forward, Dense,
};
pub use init::glorot_uniform;
pub use pool::{avg_pool, avg_pool_backward, avg_unpool, avg_unpool_backward};

use std::fmt::Debug;
use std::sync::Arc;

use num_traits::{Float, NumAssign};

use crate::patch::{GridShape, PatchGrid};

/// Scalar type for network arithmetic.
pub trait Real:
    Float + NumAssign + Default + Debug + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// A minibatch of feature grids sharing one lattice shape.
///
/// Storage is cell-major, then channel, then batch:
/// `data[(cell * channels + c) * batch + b]`, making the batch the
/// contiguous vector axis of every layer's inner loop. Invalid cells hold
/// zeros.
#[derive(Debug, Clone)]
pub struct GridBatch<T> {
    pub shape: Arc<GridShape>,
    pub batch: usize,
    pub channels: usize,
    pub data: Vec<T>,
}

impl<T: PartialEq> PartialEq for GridBatch<T> {
    fn eq(&self, other: &Self) -> bool {
        self.shape.level == other.shape.level
            && self.shape.pad == other.shape.pad
            && self.batch == other.batch
            && self.channels == other.channels
            && self.data == other.data
    }
}

impl<T: Real> GridBatch<T> {
    pub fn zeros(shape: Arc<GridShape>, batch: usize, channels: usize) -> Self {
        let len = shape.side * shape.side * batch * channels;
        GridBatch {
            shape,
            batch,
            channels,
            data: vec![T::default(); len],
        }
    }

    /// Packs extracted patches (all sharing one shape) into a batch.
    pub fn from_patches(patches: &[&PatchGrid]) -> Self {
        let shape = patches[0].shape.clone();
        let channels = patches[0].channels;
        let batch = patches.len();
        let mut out = GridBatch::zeros(shape.clone(), batch, channels);
        for (b, patch) in patches.iter().enumerate() {
            debug_assert_eq!(patch.shape.side, shape.side);
            for cell in 0..shape.side * shape.side {
                for c in 0..channels {
                    out.data[(cell * channels + c) * batch + b] =
                        T::from_f64(patch.data[cell * channels + c]);
                }
            }
        }
        out
    }

    /// Extracts one sample's cell-major feature block as f64.
    pub fn sample_to_f64(&self, b: usize) -> Vec<f64> {
        let cells = self.shape.side * self.shape.side;
        let mut out = vec![0.0f64; cells * self.channels];
        for cell in 0..cells {
            for c in 0..self.channels {
                out[cell * self.channels + c] =
                    self.data[(cell * self.channels + c) * self.batch + b].to_f64();
            }
        }
        out
    }

    /// Value at `(cell, channel, sample)`.
    pub fn at(&self, cell: usize, c: usize, b: usize) -> T {
        self.data[(cell * self.channels + c) * self.batch + b]
    }
}
