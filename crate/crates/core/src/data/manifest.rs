use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SplitSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassInfo {
    pub name: String,
    pub rgb: [u8; 3],
    pub train: usize,
    pub test: usize,
}

/// Published train/test pixel sets as flat `row * width + col` indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitMasks {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Dataset sidecar: class names, map palette and split counts, indexed so
/// that `classes[c - 1]` describes label id `c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub classes: Vec<ClassInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitMasks>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        if manifest.classes.is_empty() {
            return Err(Error::Consistency("manifest lists no classes".into()));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn palette(&self) -> Vec<[u8; 3]> {
        self.classes.iter().map(|c| c.rgb).collect()
    }

    pub fn total_train(&self) -> usize {
        self.classes.iter().map(|c| c.train).sum()
    }

    pub fn total_test(&self) -> usize {
        self.classes.iter().map(|c| c.test).sum()
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            train: self.classes.iter().map(|c| c.train).collect(),
            test: self.classes.iter().map(|c| c.test).collect(),
            seed,
            masks: self.split.clone(),
        }
    }
}
