use std::path::Path;

use crate::data::{
    extract_patch, load_scene, make_split, normalize_bands, Manifest, Patch, SceneCube, Split,
};
use crate::error::{Error, Result};
use crate::model::ModelConfig;

use super::DataPaths;

/// A standardized scene with its manifest and a drawn train/test split.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub cube: SceneCube<f32>,
    pub manifest: Manifest,
    pub split: Split,
}

impl Dataset {
    pub fn load(paths: &DataPaths, fallback: Option<&Path>, seed: u64) -> Result<Self> {
        let p = paths.resolve(fallback);
        let cube = load_scene(&p.cube, &p.labels)?;
        let manifest = Manifest::load(&p.manifest)?;
        Self::from_parts(cube, manifest, seed)
    }

    /// Standardizes every band and samples the split from `seed`.
    pub fn from_parts(cube: SceneCube<f32>, manifest: Manifest, seed: u64) -> Result<Self> {
        cube.check_labels(manifest.num_classes())?;
        let cube = normalize_bands(&cube)?;
        let split = make_split(&cube, &manifest.split_spec(seed))?;
        Ok(Self {
            cube,
            manifest,
            split,
        })
    }

    /// Fails unless `config` matches the scene's bands and class count.
    pub fn check_model(&self, config: &ModelConfig) -> Result<()> {
        check_model(&self.cube, self.manifest.num_classes(), config)
    }

    pub fn patches(&self, indices: &[usize], size: usize) -> Result<Vec<Patch<f32>>> {
        patches(&self.cube, indices, size)
    }
}

pub fn check_model(cube: &SceneCube<f32>, classes: usize, config: &ModelConfig) -> Result<()> {
    if config.bands != cube.bands {
        return Err(Error::Consistency(format!(
            "model expects {} bands, scene has {}",
            config.bands, cube.bands
        )));
    }
    if config.classes != classes {
        return Err(Error::Consistency(format!(
            "model predicts {} classes, scene has {classes}",
            config.classes
        )));
    }
    Ok(())
}

/// Patches around flat pixel indices.
pub fn patches(cube: &SceneCube<f32>, indices: &[usize], size: usize) -> Result<Vec<Patch<f32>>> {
    indices
        .iter()
        .map(|&i| extract_patch(cube, i / cube.width, i % cube.width, size))
        .collect()
}
