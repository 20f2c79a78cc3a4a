//! Binary patch-dataset container.
//!
//! Layout: magic `SRPB`, little-endian u32 header length, JSON header,
//! then little-endian f32 cell features, one dense `side*side*channels`
//! block per patch in header order. The header records the grid shape, a
//! validity bitmap, and per-patch means and base-face ids.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::shape::grid_shape;
use super::PatchGrid;

const MAGIC: &[u8; 4] = b"SRPB";

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    level: u32,
    pad_width: u32,
    patch_count: usize,
    channels: usize,
    /// Validity bitmap over the square storage, row-major, one byte per
    /// cell (shared by all patches of a given shape).
    mask: Vec<u8>,
    patch_means: Vec<[f64; 3]>,
    base_faces: Vec<u32>,
}

pub fn save_patch_dataset(patches: &[PatchGrid], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let first = patches
        .first()
        .ok_or(Error::EmptyDataset)?;
    let shape = &first.shape;
    let header = Header {
        version: 1,
        level: shape.level,
        pad_width: shape.pad,
        patch_count: patches.len(),
        channels: first.channels,
        mask: shape.valid.iter().map(|&v| v as u8).collect(),
        patch_means: patches
            .iter()
            .map(|p| [p.patch_mean.x, p.patch_mean.y, p.patch_mean.z])
            .collect(),
        base_faces: patches.iter().map(|p| p.base_face).collect(),
    };
    let header_json = serde_json::to_vec(&header).map_err(|e| Error::Corrupt(e.to_string()))?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(MAGIC).map_err(|e| Error::io(path, e))?;
    file.write_all(&(header_json.len() as u32).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&header_json).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::with_capacity(patches.len() * first.data.len() * 4);
    for patch in patches {
        if patch.shape.level != shape.level || patch.shape.pad != shape.pad {
            return Err(Error::LayoutMismatch {
                expected_level: shape.level,
                expected_pad: shape.pad,
                level: patch.shape.level,
                pad: patch.shape.pad,
            });
        }
        for &x in &patch.data {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn load_patch_dataset(path: impl AsRef<Path>) -> Result<Vec<PatchGrid>> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|_| Error::Corrupt("missing magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)
        .map_err(|_| Error::Corrupt("missing header length".into()))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    file.read_exact(&mut header_json)
        .map_err(|_| Error::Corrupt("truncated header".into()))?;
    let header: Header =
        serde_json::from_slice(&header_json).map_err(|e| Error::Corrupt(e.to_string()))?;
    if header.version != 1 {
        return Err(Error::Version(header.version));
    }
    let shape = grid_shape(header.level, header.pad_width);
    let expected_mask: Vec<u8> = shape.valid.iter().map(|&v| v as u8).collect();
    if header.mask != expected_mask {
        return Err(Error::Corrupt("validity bitmap mismatch".into()));
    }
    if header.patch_means.len() != header.patch_count
        || header.base_faces.len() != header.patch_count
    {
        return Err(Error::Corrupt("per-patch metadata length mismatch".into()));
    }
    let cells = shape.side * shape.side * header.channels;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    if raw.len() != header.patch_count * cells * 4 {
        return Err(Error::Corrupt(format!(
            "feature block is {} bytes, expected {}",
            raw.len(),
            header.patch_count * cells * 4
        )));
    }
    let mut patches = Vec::with_capacity(header.patch_count);
    for p in 0..header.patch_count {
        let mut data = Vec::with_capacity(cells);
        for k in 0..cells {
            let at = (p * cells + k) * 4;
            let bytes: [u8; 4] = raw[at..at + 4].try_into().unwrap();
            data.push(f32::from_le_bytes(bytes) as f64);
        }
        patches.push(PatchGrid {
            shape: shape.clone(),
            base_face: header.base_faces[p],
            channels: header.channels,
            data,
            patch_mean: Vector3::new(
                header.patch_means[p][0],
                header.patch_means[p][1],
                header.patch_means[p][2],
            ),
        });
    }
    Ok(patches)
}
