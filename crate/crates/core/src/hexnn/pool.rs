//! Average pooling and unpooling along the subdivision hierarchy.
//!
//! Pooling keeps cells whose axial coordinates are both even (undoing one
//! 1-to-4 face subdivision); a kept cell takes the average of its own
//! value and the valid removed one-ring neighbors. Unpooling doubles
//! coordinates, averages new edge midpoints from their two coarse
//! endpoints, and zero-fills target cells with no valid coarse parent.

use crate::error::{Error, Result};

use super::tables::{pool_table, unpool_table, UnpoolKind};
use super::{GridBatch, Real};

#[inline]
fn row<T>(data: &[T], cell: usize, c: usize, channels: usize, batch: usize) -> &[T] {
    &data[(cell * channels + c) * batch..][..batch]
}

#[inline]
fn row_mut<T>(data: &mut [T], cell: usize, c: usize, channels: usize, batch: usize) -> &mut [T] {
    &mut data[(cell * channels + c) * batch..][..batch]
}

/// Pools `(l, w)` down to `(l-1, max(w-1, 0))`.
pub fn avg_pool<T: Real>(x: &GridBatch<T>) -> Result<GridBatch<T>> {
    if x.shape.level == 0 {
        return Err(Error::Invalid("cannot pool a level-0 grid".into()));
    }
    let table = pool_table(&x.shape);
    let (batch, channels) = (x.batch, x.channels);
    let mut y = GridBatch::zeros(table.to.clone(), batch, channels);
    for entry in &table.entries {
        let scale = T::from_f64(1.0 / (1.0 + entry.nbr_count as f64));
        for c in 0..channels {
            let yrow = row_mut(&mut y.data, entry.out as usize, c, channels, batch);
            let center = row(&x.data, entry.center as usize, c, channels, batch);
            yrow.copy_from_slice(center);
            for &nbr in &entry.nbrs[..entry.nbr_count as usize] {
                let nrow = row(&x.data, nbr as usize, c, channels, batch);
                for (yb, &nb) in yrow.iter_mut().zip(nrow) {
                    *yb += nb;
                }
            }
            for yb in yrow.iter_mut() {
                *yb *= scale;
            }
        }
    }
    Ok(y)
}

/// Backward pass of [`avg_pool`].
pub fn avg_pool_backward<T: Real>(x: &GridBatch<T>, dy: &GridBatch<T>) -> Result<GridBatch<T>> {
    let table = pool_table(&x.shape);
    let (batch, channels) = (x.batch, x.channels);
    let mut dx = GridBatch::zeros(x.shape.clone(), batch, channels);
    for entry in &table.entries {
        let scale = T::from_f64(1.0 / (1.0 + entry.nbr_count as f64));
        for c in 0..channels {
            let gup = row(&dy.data, entry.out as usize, c, channels, batch);
            let grow = row_mut(&mut dx.data, entry.center as usize, c, channels, batch);
            for (gb, &ub) in grow.iter_mut().zip(gup) {
                *gb += ub * scale;
            }
            for &nbr in &entry.nbrs[..entry.nbr_count as usize] {
                let grow = row_mut(&mut dx.data, nbr as usize, c, channels, batch);
                for (gb, &ub) in grow.iter_mut().zip(gup) {
                    *gb += ub * scale;
                }
            }
        }
    }
    Ok(dx)
}

/// Unpools `(l, w)` up into the supplied target layout `(l+1, to_pad)`.
pub fn avg_unpool<T: Real>(x: &GridBatch<T>, to_pad: u32) -> Result<GridBatch<T>> {
    let table = unpool_table(&x.shape, x.shape.level + 1, to_pad);
    let (batch, channels) = (x.batch, x.channels);
    let mut y = GridBatch::zeros(table.to.clone(), batch, channels);
    let half = T::from_f64(0.5);
    for entry in &table.entries {
        match entry.kind {
            UnpoolKind::Copy(src) => {
                for c in 0..channels {
                    let yrow = row_mut(&mut y.data, entry.out as usize, c, channels, batch);
                    yrow.copy_from_slice(row(&x.data, src as usize, c, channels, batch));
                }
            }
            UnpoolKind::Avg(a, bb) => {
                for c in 0..channels {
                    let yrow = row_mut(&mut y.data, entry.out as usize, c, channels, batch);
                    let arow = row(&x.data, a as usize, c, channels, batch);
                    let brow = row(&x.data, bb as usize, c, channels, batch);
                    for ((yb, &ab), &cb) in yrow.iter_mut().zip(arow).zip(brow) {
                        *yb = (ab + cb) * half;
                    }
                }
            }
            UnpoolKind::Zero => {}
        }
    }
    Ok(y)
}

/// Backward pass of [`avg_unpool`].
pub fn avg_unpool_backward<T: Real>(
    x: &GridBatch<T>,
    to_pad: u32,
    dy: &GridBatch<T>,
) -> Result<GridBatch<T>> {
    let table = unpool_table(&x.shape, x.shape.level + 1, to_pad);
    let (batch, channels) = (x.batch, x.channels);
    let mut dx = GridBatch::zeros(x.shape.clone(), batch, channels);
    let half = T::from_f64(0.5);
    for entry in &table.entries {
        match entry.kind {
            UnpoolKind::Copy(src) => {
                for c in 0..channels {
                    let grow = row_mut(&mut dx.data, src as usize, c, channels, batch);
                    let gup = row(&dy.data, entry.out as usize, c, channels, batch);
                    for (gb, &ub) in grow.iter_mut().zip(gup) {
                        *gb += ub;
                    }
                }
            }
            UnpoolKind::Avg(a, bb) => {
                for c in 0..channels {
                    let gup = row(&dy.data, entry.out as usize, c, channels, batch);
                    let grow = row_mut(&mut dx.data, a as usize, c, channels, batch);
                    for (gb, &ub) in grow.iter_mut().zip(gup) {
                        *gb += ub * half;
                    }
                    let grow = row_mut(&mut dx.data, bb as usize, c, channels, batch);
                    for (gb, &ub) in grow.iter_mut().zip(gup) {
                        *gb += ub * half;
                    }
                }
            }
            UnpoolKind::Zero => {}
        }
    }
    Ok(dx)
}
