//! A dataset directory produced by preparation: the normalised, padded
//! cube plus the split assignment. Patches are regenerated on load from the
//! stored origins, so every low-resolution patch is reproducible.
//!
//! ```text
//! <dir>/cube.hsr            normalised, band-padded cube (HSR1)
//! <dir>/dataset.cfg         preparation spec (key=value)
//! <dir>/normalization.cfg   min/max of the original values
//! <dir>/splits.txt          one "split row col" line per patch
//! <dir>/audit.txt           counts and the test-overlap check
//! ```

use std::fs;
use std::path::Path;

use crate::config::KeyValues;
use crate::data::cube::{center_crop, load_cube, normalize, pad_bands, pad_target, save_cube, HyperCube, Normalization};
use crate::data::patches::{build_patch, make_splits, DatasetSpec, PatchRecord, Split, Splits};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PreparedDataset {
    pub spec: DatasetSpec,
    pub cube: HyperCube,
    pub normalization: Normalization,
    pub splits: Splits,
}

impl PreparedDataset {
    /// Crop, normalise, pad and split a raw cube.
    pub fn prepare(raw: &HyperCube, spec: &DatasetSpec) -> Result<Self> {
        spec.validate()?;
        let cropped = match spec.crop {
            Some(size) => center_crop(raw, size)?,
            None => raw.clone(),
        };
        let (normalized, normalization) = normalize(&cropped)?;
        let target = spec.pad_target.unwrap_or_else(|| pad_target(normalized.bands(), spec.group_size));
        if target % spec.group_size != 0 {
            return Err(Error::InvalidArgument(format!(
                "pad target {target} is not a multiple of the group size {}",
                spec.group_size
            )));
        }
        let cube = pad_bands(&normalized, target, spec.group_size)?;
        let splits = make_splits(cube.height(), cube.width(), spec, spec.seed)?;
        if splits.train.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}x{} cube yields no training patches of size {}",
                cube.height(),
                cube.width(),
                spec.patch_size
            )));
        }
        Ok(Self { spec: spec.clone(), cube, normalization, splits })
    }

    pub fn group_count(&self) -> usize {
        self.cube.bands() / self.spec.group_size
    }

    pub fn patches(&self, split: Split) -> Result<Vec<PatchRecord>> {
        self.splits
            .get(split)
            .iter()
            .map(|&o| build_patch(&self.cube, o, self.spec.patch_size, self.spec.scale, split))
            .collect()
    }

    pub fn audit_text(&self) -> String {
        let s = &self.splits;
        let overlap = s.test_overlap_pixels(self.spec.patch_size);
        let test: Vec<String> = s.test.iter().map(|o| format!("{},{}", o.row, o.col)).collect();
        let mut kv = KeyValues::new();
        kv.set("dataset", &self.spec.name);
        kv.set("cube", format!("{}x{}", self.cube.height(), self.cube.width()));
        kv.set("bands_original", self.cube.original_bands());
        kv.set("bands_padded", self.cube.bands());
        kv.set("groups", self.group_count());
        kv.set("patch_size", self.spec.patch_size);
        kv.set("stride", self.spec.stride);
        kv.set("scale", self.spec.scale);
        kv.set("test_origin", test.join(";"));
        kv.set("train", s.train.len());
        kv.set("val", s.val.len());
        kv.set("test", s.test.len());
        kv.set("excluded", s.excluded.len());
        kv.set("overlap_pixels", overlap);
        kv.set("overlap_check", if overlap == 0 { "pass" } else { "fail" });
        kv.to_text()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        save_cube(&self.cube, dir.join("cube.hsr"))?;
        fs::write(dir.join("dataset.cfg"), self.spec.to_key_values().to_text())?;
        let mut norm = KeyValues::new();
        norm.set("min", self.normalization.min);
        norm.set("max", self.normalization.max);
        fs::write(dir.join("normalization.cfg"), norm.to_text())?;
        fs::write(dir.join("splits.txt"), self.splits.to_text())?;
        fs::write(dir.join("audit.txt"), self.audit_text())?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("dataset directory {} not found", dir.display()),
            )));
        }
        let spec = DatasetSpec::from_key_values(&KeyValues::load(dir.join("dataset.cfg"))?)?;
        let mut cube = load_cube(dir.join("cube.hsr"))?;
        cube.name = spec.name.clone();
        let norm = KeyValues::load(dir.join("normalization.cfg"))?;
        let normalization = Normalization { min: norm.require("min")?, max: norm.require("max")? };
        let mut splits = Splits::parse(&fs::read_to_string(dir.join("splits.txt"))?)?;
        if splits.test.is_empty() || splits.train.is_empty() {
            return Err(Error::Format("splits file lists no test or no training patches".into()));
        }
        splits.excluded.clear();
        if cube.bands() % spec.group_size != 0 {
            return Err(Error::Format(format!(
                "stored cube has {} bands, not a multiple of {}",
                cube.bands(),
                spec.group_size
            )));
        }
        Ok(Self { spec, cube, normalization, splits })
    }
}
