//! Checkpoint files: a JSON manifest followed by a binary blob.
//!
//! Byte layout: magic `SRCK`, little-endian u32 manifest length, manifest
//! JSON, then the 18184 parameters as little-endian f32. When optimizer
//! state is included, the first/second moments follow as f32 blocks plus
//! a little-endian u64 step counter.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexnn::AdamState;

use super::{architecture_fingerprint, Autoencoder, PARAM_COUNT};

const MAGIC: &[u8; 4] = b"SRCK";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub fingerprint: String,
    pub param_count: usize,
    pub has_optimizer: bool,
    pub epoch: usize,
    pub loss_history: Vec<f64>,
}

pub fn save_checkpoint(
    model: &Autoencoder<f32>,
    optimizer: Option<&AdamState<f32>>,
    loss_history: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let manifest = CheckpointManifest {
        version: 1,
        fingerprint: model.fingerprint(),
        param_count: model.param_count(),
        has_optimizer: optimizer.is_some(),
        epoch: loss_history.len(),
        loss_history: loss_history.to_vec(),
    };
    let manifest_json =
        serde_json::to_vec(&manifest).map_err(|e| Error::Corrupt(e.to_string()))?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(MAGIC).map_err(|e| Error::io(path, e))?;
    file.write_all(&(manifest_json.len() as u32).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&manifest_json).map_err(|e| Error::io(path, e))?;
    let mut blob = Vec::with_capacity(model.params.len() * 4);
    for &p in &model.params {
        blob.extend_from_slice(&p.to_le_bytes());
    }
    if let Some(state) = optimizer {
        for &m in &state.m {
            blob.extend_from_slice(&m.to_le_bytes());
        }
        for &v in &state.v {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        blob.extend_from_slice(&state.step.to_le_bytes());
    }
    file.write_all(&blob).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(
    path: impl AsRef<Path>,
) -> Result<(Autoencoder<f32>, Option<AdamState<f32>>, CheckpointManifest)> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|_| Error::Corrupt("missing magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let mut len = [0u8; 4];
    file.read_exact(&mut len)
        .map_err(|_| Error::Corrupt("missing manifest length".into()))?;
    let mut manifest_json = vec![0u8; u32::from_le_bytes(len) as usize];
    file.read_exact(&mut manifest_json)
        .map_err(|_| Error::Corrupt("truncated manifest".into()))?;
    let manifest: CheckpointManifest =
        serde_json::from_slice(&manifest_json).map_err(|e| Error::Corrupt(e.to_string()))?;
    if manifest.version != 1 {
        return Err(Error::Version(manifest.version));
    }
    let expected = architecture_fingerprint();
    if manifest.fingerprint != expected {
        return Err(Error::FingerprintMismatch {
            expected,
            found: manifest.fingerprint,
        });
    }
    if manifest.param_count != PARAM_COUNT {
        return Err(Error::Corrupt(format!(
            "parameter count {} != {PARAM_COUNT}",
            manifest.param_count
        )));
    }
    let mut read_f32_block = |n: usize| -> Result<Vec<f32>> {
        let mut raw = vec![0u8; n * 4];
        file.read_exact(&mut raw)
            .map_err(|_| Error::Corrupt("truncated parameter blob".into()))?;
        Ok(raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect())
    };
    let params = read_f32_block(PARAM_COUNT)?;
    let mut model = Autoencoder::<f32>::zeroed();
    model.params = params;
    let optimizer = if manifest.has_optimizer {
        let m = read_f32_block(PARAM_COUNT)?;
        let v = read_f32_block(PARAM_COUNT)?;
        let mut step_bytes = [0u8; 8];
        file.read_exact(&mut step_bytes)
            .map_err(|_| Error::Corrupt("truncated optimizer state".into()))?;
        let mut state = AdamState::new(PARAM_COUNT, 0.001f32);
        state.m = m;
        state.v = v;
        state.step = u64::from_le_bytes(step_bytes);
        Some(state)
    } else {
        None
    };
    Ok((model, optimizer, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_autoencoder;

    #[test]
    fn save_load_save_is_byte_identical() {
        let model = build_autoencoder(9);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        save_checkpoint(&model, None, &[0.5, 0.25], &p1).unwrap();
        let (loaded, opt, manifest) = load_checkpoint(&p1).unwrap();
        assert!(opt.is_none());
        assert_eq!(loaded.params, model.params);
        assert_eq!(manifest.loss_history, vec![0.5, 0.25]);
        save_checkpoint(&loaded, None, &manifest.loss_history, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn optimizer_state_round_trips() {
        let model = build_autoencoder(1);
        let mut state = AdamState::new(PARAM_COUNT, 0.001f32);
        state.step = 42;
        state.m[17] = 0.25;
        state.v[9000] = 1.5;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("opt.ckpt");
        save_checkpoint(&model, Some(&state), &[], &path).unwrap();
        let (_, loaded, _) = load_checkpoint(&path).unwrap();
        let loaded = loaded.unwrap();
        assert_eq!(loaded.step, 42);
        assert_eq!(loaded.m, state.m);
        assert_eq!(loaded.v, state.v);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let model = build_autoencoder(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.ckpt");
        save_checkpoint(&model, None, &[], &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 100]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Corrupt(_))));
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let model = build_autoencoder(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.ckpt");
        save_checkpoint(&model, None, &[], &path).unwrap();
        // Corrupt the fingerprint inside the manifest.
        let mut bytes = std::fs::read(&path).unwrap();
        let json_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let manifest = String::from_utf8(bytes[8..8 + json_len].to_vec()).unwrap();
        let tampered = manifest.replacen(
            &architecture_fingerprint()[..8],
            "deadbeef",
            1,
        );
        assert_eq!(tampered.len(), manifest.len());
        bytes[8..8 + json_len].copy_from_slice(tampered.as_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::FingerprintMismatch { .. })
        ));
    }
}
