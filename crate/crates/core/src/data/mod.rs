//! Scene storage, normalization, patch extraction and train/test splits.

mod manifest;
pub(crate) mod patch;
pub mod presets;
mod scene;
mod split;
pub mod synthetic;

pub use manifest::{ClassInfo, Manifest, SplitMasks};
pub use patch::{extract_patch, reflect_index, Patch};
pub use scene::{
    load_scene, normalize_bands, read_cube, read_labels, write_cube, write_labels, SceneCube,
    CUBE_MAGIC, LABEL_MAGIC,
};
pub use split::{make_split, Split, SplitSpec};
