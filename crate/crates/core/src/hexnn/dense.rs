//! Dense layers, ReLU, and the padding-free reconstruction loss.

use crate::error::{Error, Result};

use super::{GridBatch, Real};

/// Affine layer metadata; parameters are the flat `[in][out]` weight block
/// followed by the `out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
}

impl Dense {
    pub fn param_count(&self) -> usize {
        self.in_features * self.out_features + self.out_features
    }

    fn split<'a, T>(&self, params: &'a [T]) -> (&'a [T], &'a [T]) {
        params.split_at(self.in_features * self.out_features)
    }
}

/// `y[b] = W^T x[b] + bias` over a batch stored row-major `[b][feature]`.
pub fn dense_forward<T: Real>(layer: &Dense, x: &[T], batch: usize, params: &[T]) -> Vec<T> {
    debug_assert_eq!(x.len(), batch * layer.in_features);
    debug_assert_eq!(params.len(), layer.param_count());
    let (w, bias) = layer.split(params);
    let (fin, fout) = (layer.in_features, layer.out_features);
    let mut y = vec![T::default(); batch * fout];
    for b in 0..batch {
        let xrow = &x[b * fin..(b + 1) * fin];
        let yrow = &mut y[b * fout..(b + 1) * fout];
        yrow.copy_from_slice(bias);
        for (i, &xv) in xrow.iter().enumerate() {
            let wrow = &w[i * fout..(i + 1) * fout];
            for (yo, &wo) in yrow.iter_mut().zip(wrow) {
                *yo += xv * wo;
            }
        }
    }
    y
}

/// Backward pass of [`dense_forward`]: accumulates parameter gradients and
/// returns the input gradient.
pub fn dense_backward<T: Real>(
    layer: &Dense,
    x: &[T],
    batch: usize,
    params: &[T],
    dy: &[T],
    dparams: &mut [T],
) -> Vec<T> {
    debug_assert_eq!(dy.len(), batch * layer.out_features);
    let (w, _) = layer.split(params);
    let (fin, fout) = (layer.in_features, layer.out_features);
    let (dw, dbias) = dparams.split_at_mut(fin * fout);
    let mut dx = vec![T::default(); batch * fin];
    for b in 0..batch {
        let xrow = &x[b * fin..(b + 1) * fin];
        let dyrow = &dy[b * fout..(b + 1) * fout];
        let dxrow = &mut dx[b * fin..(b + 1) * fin];
        for (db, &g) in dbias.iter_mut().zip(dyrow) {
            *db += g;
        }
        for (i, &xv) in xrow.iter().enumerate() {
            let wrow = &w[i * fout..(i + 1) * fout];
            let dwrow = &mut dw[i * fout..(i + 1) * fout];
            let mut acc = T::default();
            for ((dwo, &wo), &g) in dwrow.iter_mut().zip(wrow).zip(dyrow) {
                *dwo += xv * g;
                acc += wo * g;
            }
            dxrow[i] = acc;
        }
    }
    dx
}

/// Elementwise `max(0, x)`.
pub fn relu_forward<T: Real>(x: &GridBatch<T>) -> GridBatch<T> {
    let mut y = x.clone();
    for v in &mut y.data {
        if *v < T::default() {
            *v = T::default();
        }
    }
    y
}

/// Backward pass of ReLU given its output (`y > 0` iff `x > 0`).
pub fn relu_backward<T: Real>(y: &GridBatch<T>, dy: &GridBatch<T>) -> GridBatch<T> {
    let mut dx = dy.clone();
    for (g, &v) in dx.data.iter_mut().zip(&y.data) {
        if v <= T::default() {
            *g = T::default();
        }
    }
    dx
}

/// Mean squared difference over interior cells and channels (padding is
/// not scored), averaged over the batch, with the gradient on `pred`.
pub fn mse_interior<T: Real>(
    pred: &GridBatch<T>,
    target: &GridBatch<T>,
) -> Result<(T, GridBatch<T>)> {
    if pred.channels != target.channels
        || pred.batch != target.batch
        || pred.shape.side != target.shape.side
    {
        return Err(Error::ShapeMismatch(
            "prediction and target grids differ".into(),
        ));
    }
    let (batch, channels) = (pred.batch, pred.channels);
    let denom = T::from_f64((pred.shape.interior_count * channels * batch) as f64);
    let mut loss = T::default();
    let mut grad = GridBatch::zeros(pred.shape.clone(), batch, channels);
    let two = T::from_f64(2.0);
    for &cell in &pred.shape.interior_cells {
        for c in 0..channels {
            let base = (cell as usize * channels + c) * batch;
            for b in 0..batch {
                let d = pred.data[base + b] - target.data[base + b];
                loss += d * d;
                grad.data[base + b] = two * d / denom;
            }
        }
    }
    Ok((loss / denom, grad))
}
