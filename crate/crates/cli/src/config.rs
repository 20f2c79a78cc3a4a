//! Pipeline configuration: one JSON document, schema-checked, with
//! defaults mirroring the reference experiment setup.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use srmesh::remesh::FitConfig;
use srmesh::model::TrainConfig;
use srmesh::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub target_base_faces: usize,
    pub level: u32,
    pub pad_width: u32,
    /// Edge-length regularization weight used during simplification.
    pub simplify_lambda_edge: f64,
    pub fit: FitConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            target_base_faces: 110,
            level: 3,
            pad_width: 2,
            simplify_lambda_edge: 0.1,
            fit: FitConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Loads and validates a config file; unknown keys are rejected.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.level < 1 {
            return Err(Error::Invalid("level must be >= 1".into()));
        }
        if self.fit.samples < 100 {
            return Err(Error::Invalid("fit.samples must be >= 100".into()));
        }
        if self.train.epochs < 1 || self.train.batch_size < 1 {
            return Err(Error::Invalid(
                "train.epochs and train.batch_size must be >= 1".into(),
            ));
        }
        let weights = [
            self.fit.w_chamfer,
            self.fit.w_edge,
            self.fit.w_normal,
            self.fit.w_laplacian,
        ];
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Invalid("fit weights must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.train.train_fraction) {
            return Err(Error::Invalid("train.train_fraction must be in [0, 1]".into()));
        }
        Ok(())
    }

    /// Routes the master seed into every stage's named stream root.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.fit.seed = seed;
        self.train.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_mirror_reference_setup() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.target_base_faces, 110);
        assert_eq!(cfg.level, 3);
        assert_eq!(cfg.pad_width, 2);
        assert_eq!(cfg.train.epochs, 500);
        assert_eq!(cfg.train.batch_size, 100);
        assert_eq!(cfg.train.learning_rate, 0.001);
        assert!(cfg.train.augment);
        assert_eq!(cfg.train.train_fraction, 0.75);
        assert_eq!(cfg.fit.w_chamfer, 1.0);
        assert_eq!(cfg.fit.w_edge, 1.0);
        assert_eq!(cfg.fit.w_normal, 0.01);
        assert_eq!(cfg.fit.w_laplacian, 0.1);
        assert_eq!(cfg.fit.samples, 5000);
        assert_eq!(cfg.fit.steps, 2000);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        f.write_all(br#"{"level": 3, "bogus_key": 1}"#).unwrap();
        assert!(PipelineConfig::load(f.path()).is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        f.write_all(br#"{"target_base_faces": 80, "fit": {"steps": 10}}"#)
            .unwrap();
        let cfg = PipelineConfig::load(f.path()).unwrap();
        assert_eq!(cfg.target_base_faces, 80);
        assert_eq!(cfg.fit.steps, 10);
        assert_eq!(cfg.fit.samples, 5000);
        assert_eq!(cfg.level, 3);
    }
}
