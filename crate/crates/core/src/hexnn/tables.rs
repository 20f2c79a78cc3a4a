//! Precomputed index tables for the lattice layers, cached per shape.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use crate::patch::{grid_shape, tap_offsets, GridShape};

/// One convolution contribution: output cell, input cell, tap index.
/// Pairs are ordered by output cell (storage order), then tap.
pub struct ConvTable {
    pub pairs: Vec<(u32, u32, u16)>,
}

static CONV_TABLES: LazyLock<Mutex<HashMap<(u32, u32, u32), Arc<ConvTable>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

pub fn conv_table(shape: &GridShape, radius: u32) -> Arc<ConvTable> {
    let key = (shape.level, shape.pad, radius);
    let mut cache = CONV_TABLES.lock().unwrap();
    cache
        .entry(key)
        .or_insert_with(|| {
            let offsets = tap_offsets(radius);
            let mut pairs = Vec::new();
            for &out in &shape.valid_cells {
                let (i, j) = shape.coords_of(out as usize);
                for (tap, &(di, dj)) in offsets.iter().enumerate() {
                    if let Some(q) = shape.index_of(i + di, j + dj) {
                        if shape.valid[q] {
                            pairs.push((out, q as u32, tap as u16));
                        }
                    }
                }
            }
            Arc::new(ConvTable { pairs })
        })
        .clone()
}

/// Pooling: one entry per kept (output) cell. `nbrs` are the valid
/// one-ring neighbors removed by the pooling.
pub struct PoolEntry {
    pub out: u32,
    pub center: u32,
    pub nbrs: [u32; 6],
    pub nbr_count: u8,
}

pub struct PoolTable {
    pub to: Arc<GridShape>,
    pub entries: Vec<PoolEntry>,
}

static POOL_TABLES: LazyLock<Mutex<HashMap<(u32, u32), Arc<PoolTable>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

pub fn pool_table(shape: &GridShape) -> Arc<PoolTable> {
    assert!(shape.level >= 1, "cannot pool level 0");
    let key = (shape.level, shape.pad);
    let mut cache = POOL_TABLES.lock().unwrap();
    cache
        .entry(key)
        .or_insert_with(|| {
            let from = grid_shape(shape.level, shape.pad);
            let to = grid_shape(shape.level - 1, shape.pad.saturating_sub(1));
            let offsets = tap_offsets(1);
            let mut entries = Vec::with_capacity(to.valid_count);
            for &out in &to.valid_cells {
                let (oi, oj) = to.coords_of(out as usize);
                let (ci, cj) = (2 * oi, 2 * oj);
                let center = from
                    .index_of(ci, cj)
                    .expect("kept cell is inside the finer storage");
                assert!(from.valid[center], "kept cell must be valid");
                let mut nbrs = [0u32; 6];
                let mut count = 0u8;
                for &(di, dj) in offsets.iter().skip(1) {
                    if let Some(q) = from.index_of(ci + di, cj + dj) {
                        if from.valid[q] {
                            nbrs[count as usize] = q as u32;
                            count += 1;
                        }
                    }
                }
                entries.push(PoolEntry {
                    out,
                    center: center as u32,
                    nbrs,
                    nbr_count: count,
                });
            }
            Arc::new(PoolTable { to, entries })
        })
        .clone()
}

/// Unpooling: one entry per target cell. Kept cells copy their coarse
/// parent; new edge-midpoint cells average their two coarse endpoints;
/// cells without valid coarse parents (re-introduced padding) are
/// zero-filled but stay valid for convolution.
pub enum UnpoolKind {
    Copy(u32),
    Avg(u32, u32),
    Zero,
}

pub struct UnpoolEntry {
    pub out: u32,
    pub kind: UnpoolKind,
}

pub struct UnpoolTable {
    pub to: Arc<GridShape>,
    pub entries: Vec<UnpoolEntry>,
}

static UNPOOL_TABLES: LazyLock<Mutex<HashMap<(u32, u32, u32, u32), Arc<UnpoolTable>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

pub fn unpool_table(from: &GridShape, to_level: u32, to_pad: u32) -> Arc<UnpoolTable> {
    assert_eq!(to_level, from.level + 1, "unpool raises one level");
    let key = (from.level, from.pad, to_level, to_pad);
    let mut cache = UNPOOL_TABLES.lock().unwrap();
    cache
        .entry(key)
        .or_insert_with(|| {
            let from = grid_shape(from.level, from.pad);
            let to = grid_shape(to_level, to_pad);
            let even = |x: i32| x.rem_euclid(2) == 0;
            let coarse = |i: i32, j: i32| -> Option<u32> {
                from.index_of(i, j)
                    .filter(|&q| from.valid[q])
                    .map(|q| q as u32)
            };
            let mut entries = Vec::with_capacity(to.valid_count);
            for &out in &to.valid_cells {
                let (i, j) = to.coords_of(out as usize);
                let kind = if even(i) && even(j) {
                    match coarse(i / 2, j / 2) {
                        Some(p) => UnpoolKind::Copy(p),
                        None => UnpoolKind::Zero,
                    }
                } else {
                    let (pa, pb) = if !even(i) && even(j) {
                        (((i - 1) / 2, j / 2), ((i + 1) / 2, j / 2))
                    } else if even(i) && !even(j) {
                        ((i / 2, (j - 1) / 2), (i / 2, (j + 1) / 2))
                    } else {
                        (((i + 1) / 2, (j - 1) / 2), ((i - 1) / 2, (j + 1) / 2))
                    };
                    match (coarse(pa.0, pa.1), coarse(pb.0, pb.1)) {
                        (Some(a), Some(b)) => UnpoolKind::Avg(a, b),
                        _ => UnpoolKind::Zero,
                    }
                };
                entries.push(UnpoolEntry { out, kind });
            }
            Arc::new(UnpoolTable { to, entries })
        })
        .clone()
}
