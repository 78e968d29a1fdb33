//! Hyperspectral data handling: cube I/O, normalisation, band padding and
//! grouping, patching, degradation and dataset splits.

pub mod cube;
pub mod patches;
pub mod prepared;
pub mod resample;
pub mod synthetic;

pub use cube::{
    center_crop, group_bands, load_cube, normalize, pad_bands, pad_target, save_cube, ungroup, HyperCube,
    Normalization,
};
pub use patches::{build_patch, extract_patches, make_splits, DatasetSpec, PatchOrigin, PatchRecord, Split, Splits};
pub use prepared::PreparedDataset;
pub use resample::{bicubic_upsample, degrade};
pub use synthetic::SyntheticScene;
