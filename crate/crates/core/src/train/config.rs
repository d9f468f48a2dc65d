use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Locations of the three dataset files. Relative file names resolve
/// against `dir`; a relative (or missing) `dir` resolves against the
/// caller-supplied fallback root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    pub dir: Option<PathBuf>,
    pub cube: PathBuf,
    pub labels: PathBuf,
    pub manifest: PathBuf,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self {
            dir: None,
            cube: "scene.hsic".into(),
            labels: "labels.hsilbl".into(),
            manifest: "manifest.json".into(),
        }
    }
}

/// Cube, label and manifest paths after resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedPaths {
    pub cube: PathBuf,
    pub labels: PathBuf,
    pub manifest: PathBuf,
}

impl DataPaths {
    pub fn resolve(&self, fallback: Option<&Path>) -> ResolvedPaths {
        let root = match (self.dir.as_deref(), fallback) {
            (Some(d), Some(f)) if d.is_relative() => Some(f.join(d)),
            (Some(d), _) => Some(d.to_path_buf()),
            (None, f) => f.map(Path::to_path_buf),
        };
        let join = |p: &Path| match &root {
            Some(r) if p.is_relative() => r.join(p),
            _ => p.to_path_buf(),
        };
        ResolvedPaths {
            cube: join(&self.cube),
            labels: join(&self.labels),
            manifest: join(&self.manifest),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr0: f64,
    /// Per-epoch learning-rate multiplier.
    pub lr_gamma: f64,
    pub epochs: usize,
    pub batch: usize,
    pub weight_decay: f64,
    pub seed: u64,
    /// Worker threads for per-batch gradients; 1 is the reference mode.
    pub threads: usize,
    pub data: DataPaths,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-4,
            lr_gamma: 0.995,
            epochs: 400,
            batch: 64,
            weight_decay: 1e-4,
            seed: 0,
            threads: 1,
            data: DataPaths::default(),
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!(
                "lr0 must be positive, got {}",
                self.lr0
            )));
        }
        if !(self.lr_gamma > 0.0 && self.lr_gamma <= 1.0) {
            return Err(Error::Config(format!(
                "lr_gamma must lie in (0, 1], got {}",
                self.lr_gamma
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        for (name, v) in [
            ("epochs", self.epochs),
            ("batch", self.batch),
            ("threads", self.threads),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        self.model.validate()
    }
}
