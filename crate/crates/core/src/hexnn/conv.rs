//! Hexagonal convolution on padded patch grids.
//!
//! Kernels have no bias. Weights are stored in the frozen checkpoint
//! order `[out][in][tap]` with the canonical tap spiral (center, ring 1
//! counterclockwise from (+1, 0), ring 2 likewise). Invalid or missing
//! neighbors contribute zero, so the convolution preserves the cell count.

use crate::error::{Error, Result};
use crate::patch::tap_count;

use super::tables::conv_table;
use super::{GridBatch, Real};

/// Shape metadata of one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HexConv {
    pub radius: u32,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl HexConv {
    pub fn taps(&self) -> usize {
        tap_count(self.radius)
    }

    /// Weight count `out * in * taps`; there is no bias.
    pub fn param_count(&self) -> usize {
        self.out_channels * self.in_channels * self.taps()
    }

    /// Forward pass. `weights` is the flat `[out][in][tap]` block.
    pub fn forward<T: Real>(&self, x: &GridBatch<T>, weights: &[T]) -> Result<GridBatch<T>> {
        if x.channels != self.in_channels {
            return Err(Error::ChannelMismatch {
                expected: self.in_channels,
                got: x.channels,
            });
        }
        debug_assert_eq!(weights.len(), self.param_count());
        let taps = self.taps();
        let (cin, cout, batch) = (self.in_channels, self.out_channels, x.batch);
        // Scratch transpose to [tap][in][out].
        let mut w = vec![T::default(); weights.len()];
        for o in 0..cout {
            for ci in 0..cin {
                for t in 0..taps {
                    w[(t * cin + ci) * cout + o] = weights[(o * cin + ci) * taps + t];
                }
            }
        }
        let table = conv_table(&x.shape, self.radius);
        let mut y = GridBatch::zeros(x.shape.clone(), batch, cout);
        for &(p, q, tap) in &table.pairs {
            let wbase = tap as usize * cin * cout;
            let xblock = &x.data[q as usize * cin * batch..][..cin * batch];
            let yblock = &mut y.data[p as usize * cout * batch..][..cout * batch];
            for o in 0..cout {
                let yrow = &mut yblock[o * batch..][..batch];
                for ci in 0..cin {
                    let wv = w[wbase + ci * cout + o];
                    let xrow = &xblock[ci * batch..][..batch];
                    for (yb, &xb) in yrow.iter_mut().zip(xrow) {
                        *yb = wv.mul_add(xb, *yb);
                    }
                }
            }
        }
        Ok(y)
    }

    /// Backward pass: accumulates the weight gradient into `dweights`
    /// (same `[out][in][tap]` layout) and returns the input gradient when
    /// `need_dx` is set.
    pub fn backward<T: Real>(
        &self,
        x: &GridBatch<T>,
        weights: &[T],
        dy: &GridBatch<T>,
        dweights: &mut [T],
        need_dx: bool,
    ) -> Result<Option<GridBatch<T>>> {
        if dy.channels != self.out_channels || x.channels != self.in_channels {
            return Err(Error::ChannelMismatch {
                expected: self.out_channels,
                got: dy.channels,
            });
        }
        debug_assert_eq!(dweights.len(), self.param_count());
        let taps = self.taps();
        let (cin, cout, batch) = (self.in_channels, self.out_channels, x.batch);
        let table = conv_table(&x.shape, self.radius);

        // dW in [tap][in][out] scratch, scattered back at the end. The
        // upstream gradient is transposed to batch-major once so the
        // kernel can hold a register tile of output channels.
        let mut dyt = vec![T::default(); dy.data.len()];
        let cells = dy.shape.side * dy.shape.side;
        for cell in 0..cells {
            for o in 0..cout {
                for b in 0..batch {
                    dyt[(cell * batch + b) * cout + o] = dy.data[(cell * cout + o) * batch + b];
                }
            }
        }
        let mut dw = vec![T::default(); weights.len()];
        match cout {
            3 => dw_kernel::<T, 3>(&x.data, &dyt, &mut dw, &table.pairs, cin, batch),
            16 => dw_kernel::<T, 16>(&x.data, &dyt, &mut dw, &table.pairs, cin, batch),
            32 => dw_kernel::<T, 32>(&x.data, &dyt, &mut dw, &table.pairs, cin, batch),
            _ => dw_generic(&x.data, &dyt, &mut dw, &table.pairs, cin, cout, batch),
        }
        for o in 0..cout {
            for ci in 0..cin {
                for t in 0..taps {
                    dweights[(o * cin + ci) * taps + t] += dw[(t * cin + ci) * cout + o];
                }
            }
        }

        if !need_dx {
            return Ok(None);
        }
        // Transpose to [tap][out][in] so dx accumulates per input channel.
        let mut wt = vec![T::default(); weights.len()];
        for o in 0..cout {
            for ci in 0..cin {
                for t in 0..taps {
                    wt[(t * cout + o) * cin + ci] = weights[(o * cin + ci) * taps + t];
                }
            }
        }
        let mut dx = GridBatch::zeros(x.shape.clone(), batch, cin);
        for &(p, q, tap) in &table.pairs {
            let wbase = tap as usize * cout * cin;
            let dyblock = &dy.data[p as usize * cout * batch..][..cout * batch];
            let dxblock = &mut dx.data[q as usize * cin * batch..][..cin * batch];
            for ci in 0..cin {
                let dxrow = &mut dxblock[ci * batch..][..batch];
                for o in 0..cout {
                    let wv = wt[wbase + o * cin + ci];
                    let dyrow = &dyblock[o * batch..][..batch];
                    for (dxb, &gb) in dxrow.iter_mut().zip(dyrow) {
                        *dxb = wv.mul_add(gb, *dxb);
                    }
                }
            }
        }
        Ok(Some(dx))
    }
}

/// Weight-gradient kernel specialized on the output channel count so the
/// `[T; COUT]` accumulators live in registers; the batch loop runs two
/// interleaved accumulator sets to break the add-latency chain. The
/// summation order is fixed, so results are reproducible.
fn dw_kernel<T: Real, const COUT: usize>(
    x: &[T],
    dyt: &[T],
    dw: &mut [T],
    pairs: &[(u32, u32, u16)],
    cin: usize,
    batch: usize,
) {
    for &(p, q, tap) in pairs {
        let xblock = &x[q as usize * cin * batch..][..cin * batch];
        let dyblock = &dyt[p as usize * batch * COUT..][..batch * COUT];
        let dwblock = &mut dw[tap as usize * cin * COUT..][..cin * COUT];
        for ci in 0..cin {
            let xrow = &xblock[ci * batch..][..batch];
            let mut acc0 = [T::default(); COUT];
            let mut acc1 = [T::default(); COUT];
            let half = batch / 2;
            for bp in 0..half {
                let s0 = xrow[2 * bp];
                let s1 = xrow[2 * bp + 1];
                let dyrow0 = &dyblock[(2 * bp) * COUT..][..COUT];
                let dyrow1 = &dyblock[(2 * bp + 1) * COUT..][..COUT];
                for o in 0..COUT {
                    acc0[o] = s0.mul_add(dyrow0[o], acc0[o]);
                    acc1[o] = s1.mul_add(dyrow1[o], acc1[o]);
                }
            }
            for b in half * 2..batch {
                let s = xrow[b];
                let dyrow = &dyblock[b * COUT..][..COUT];
                for o in 0..COUT {
                    acc0[o] = s.mul_add(dyrow[o], acc0[o]);
                }
            }
            let dwrow = &mut dwblock[ci * COUT..][..COUT];
            for o in 0..COUT {
                dwrow[o] += acc0[o] + acc1[o];
            }
        }
    }
}

/// Fallback for output channel counts without a specialized kernel.
fn dw_generic<T: Real>(
    x: &[T],
    dyt: &[T],
    dw: &mut [T],
    pairs: &[(u32, u32, u16)],
    cin: usize,
    cout: usize,
    batch: usize,
) {
    for &(p, q, tap) in pairs {
        let xblock = &x[q as usize * cin * batch..][..cin * batch];
        let dyblock = &dyt[p as usize * batch * cout..][..batch * cout];
        let dwblock = &mut dw[tap as usize * cin * cout..][..cin * cout];
        for ci in 0..cin {
            let xrow = &xblock[ci * batch..][..batch];
            let dwrow = &mut dwblock[ci * cout..][..cout];
            for (b, &s) in xrow.iter().enumerate() {
                let dyrow = &dyblock[b * cout..][..cout];
                for (dwo, &go) in dwrow.iter_mut().zip(dyrow) {
                    *dwo += s * go;
                }
            }
        }
    }
}

/// A convolution kernel with owned weights (the checkpointable view).
#[derive(Debug, Clone, PartialEq)]
pub struct HexKernel<T> {
    pub radius: u32,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<T>,
}

impl<T: Real> HexKernel<T> {
    pub fn conv(&self) -> HexConv {
        HexConv {
            radius: self.radius,
            in_channels: self.in_channels,
            out_channels: self.out_channels,
        }
    }
}

/// Convolves a grid batch with an owned kernel.
pub fn hexconv_forward<T: Real>(x: &GridBatch<T>, kernel: &HexKernel<T>) -> Result<GridBatch<T>> {
    kernel.conv().forward(x, &kernel.weights)
}

/// Backward pass for [`hexconv_forward`]: input gradient and weight
/// gradient in the kernel's layout.
pub fn hexconv_backward<T: Real>(
    x: &GridBatch<T>,
    kernel: &HexKernel<T>,
    dy: &GridBatch<T>,
) -> Result<(GridBatch<T>, Vec<T>)> {
    let mut dw = vec![T::default(); kernel.weights.len()];
    let dx = kernel
        .conv()
        .backward(x, &kernel.weights, dy, &mut dw, true)?
        .expect("dx requested");
    Ok((dx, dw))
}
