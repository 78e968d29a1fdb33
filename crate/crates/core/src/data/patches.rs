//! Patch grids, train/validation/test splits and patch materialisation.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_pair, KeyValues};
use crate::data::cube::HyperCube;
use crate::data::resample::degrade;
use crate::error::{Error, Result};
use crate::model::GROUP_SIZE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchOrigin {
    pub row: usize,
    pub col: usize,
}

impl PatchOrigin {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Shared pixel count of two `size × size` windows.
    pub fn overlap(&self, other: &PatchOrigin, size: usize) -> usize {
        let span = |a: usize, b: usize| (a.max(b)..(a + size).min(b + size)).len();
        span(self.row, other.row) * span(self.col, other.col)
    }
}

impl fmt::Display for PatchOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Dataset preparation protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub patch_size: usize,
    pub stride: usize,
    pub scale: usize,
    pub group_size: usize,
    /// Padded band count; the next multiple of `group_size` when `None`.
    pub pad_target: Option<usize>,
    /// Top-left corner of the test window; `(0, 0)` when `None`.
    pub test_origin: Option<PatchOrigin>,
    pub val_fraction: f64,
    pub seed: u64,
    /// Optional centred square crop applied before anything else.
    pub crop: Option<usize>,
}

pub const SPEC_KEYS: [&str; 10] = [
    "name",
    "patch_size",
    "stride",
    "scale",
    "group_size",
    "pad_target",
    "test_origin",
    "val_fraction",
    "seed",
    "crop",
];

impl DatasetSpec {
    pub fn new(patch_size: usize, scale: usize) -> Self {
        Self {
            name: "dataset".into(),
            patch_size,
            stride: patch_size,
            scale,
            group_size: GROUP_SIZE,
            pad_target: None,
            test_origin: None,
            val_fraction: 0.1,
            seed: 0,
            crop: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.scale == 0 || self.patch_size == 0 || self.patch_size % (2 * self.scale) != 0 {
            return bad(format!(
                "patch size {} must be a positive multiple of 2 × scale ({})",
                self.patch_size, self.scale
            ));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.group_size == 0 {
            return bad("group size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad(format!("validation fraction {} not in [0, 1)", self.val_fraction));
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&SPEC_KEYS)?;
        let patch_size = kv.require("patch_size")?;
        let mut spec = Self::new(patch_size, kv.require("scale")?);
        spec.name = kv.get_or("name", spec.name)?;
        spec.stride = kv.get_or("stride", patch_size)?;
        spec.group_size = kv.get_or("group_size", GROUP_SIZE)?;
        spec.pad_target = kv.get("pad_target")?;
        spec.test_origin = kv.raw("test_origin").map(parse_pair).transpose()?.map(|(r, c)| PatchOrigin::new(r, c));
        spec.val_fraction = kv.get_or("val_fraction", 0.1)?;
        spec.seed = kv.get_or("seed", 0)?;
        spec.crop = kv.get("crop")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("name", &self.name);
        kv.set("patch_size", self.patch_size);
        kv.set("stride", self.stride);
        kv.set("scale", self.scale);
        kv.set("group_size", self.group_size);
        if let Some(t) = self.pad_target {
            kv.set("pad_target", t);
        }
        if let Some(o) = self.test_origin {
            kv.set("test_origin", format!("{},{}", o.row, o.col));
        }
        kv.set("val_fraction", self.val_fraction);
        kv.set("seed", self.seed);
        if let Some(c) = self.crop {
            kv.set("crop", c);
        }
        kv
    }
}

/// Window origins `(i·stride, j·stride)` whose `patch × patch` window fits.
pub fn extract_patches(height: usize, width: usize, patch: usize, stride: usize) -> Vec<PatchOrigin> {
    if patch == 0 || stride == 0 || patch > height || patch > width {
        return Vec::new();
    }
    let rows = (0..=height - patch).step_by(stride);
    rows.flat_map(|r| (0..=width - patch).step_by(stride).map(move |c| PatchOrigin::new(r, c)))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<PatchOrigin>,
    pub val: Vec<PatchOrigin>,
    pub test: Vec<PatchOrigin>,
    /// Grid windows dropped because they intersect a test window.
    pub excluded: Vec<PatchOrigin>,
}

impl Splits {
    pub fn get(&self, split: Split) -> &[PatchOrigin] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Pixels shared between any test window and any train/val window.
    pub fn test_overlap_pixels(&self, patch: usize) -> usize {
        self.test
            .iter()
            .flat_map(|t| self.train.iter().chain(&self.val).map(move |o| t.overlap(o, patch)))
            .sum()
    }

    /// Plain-text listing, one `split row col` line per patch.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for split in [Split::Train, Split::Val, Split::Test] {
            for o in self.get(split) {
                out.push_str(&format!("{} {} {}\n", split.name(), o.row, o.col));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut splits = Splits::default();
        for (i, line) in text.lines().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            let bad = || Error::Format(format!("splits line {}: {line:?}", i + 1));
            let [tag, r, c] = parts[..] else { return Err(bad()) };
            let origin = PatchOrigin::new(r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?);
            match Split::parse(tag).ok_or_else(bad)? {
                Split::Train => splits.train.push(origin),
                Split::Val => splits.val.push(origin),
                Split::Test => splits.test.push(origin),
            }
        }
        Ok(splits)
    }
}

/// Rounded validation count, at least one when any patch remains.
pub fn validation_count(remaining: usize, fraction: f64) -> usize {
    if remaining == 0 {
        return 0;
    }
    ((remaining as f64 * fraction).round() as usize).clamp(1, remaining)
}

/// Assign the grid of a `height × width` cube to train/val/test.
///
/// The test window is the configured origin (top-left by default). Grid
/// windows intersecting it are dropped; the rest are shuffled with `seed`
/// and the first `validation_count` go to validation.
pub fn make_splits(height: usize, width: usize, spec: &DatasetSpec, seed: u64) -> Result<Splits> {
    spec.validate()?;
    let p = spec.patch_size;
    let test = spec.test_origin.unwrap_or(PatchOrigin::new(0, 0));
    if test.row + p > height || test.col + p > width {
        return Err(Error::InvalidArgument(format!(
            "test window {p}x{p} at {test} lies outside the {height}x{width} cube"
        )));
    }
    let (excluded, mut rest): (Vec<_>, Vec<_>) =
        extract_patches(height, width, p, spec.stride).into_iter().partition(|o| o.overlap(&test, p) > 0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rest.shuffle(&mut rng);
    let n_val = validation_count(rest.len(), spec.val_fraction);
    let mut val = rest[..n_val].to_vec();
    let mut train = rest[n_val..].to_vec();
    val.sort();
    train.sort();
    let excluded = excluded.into_iter().filter(|o| *o != test).collect();
    Ok(Splits { train, val, test: vec![test], excluded })
}

/// A high-resolution patch with its degraded low-resolution counterpart.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchRecord {
    pub hr: HyperCube,
    pub lr: HyperCube,
    pub origin: PatchOrigin,
    pub split: Split,
}

pub fn build_patch(cube: &HyperCube, origin: PatchOrigin, patch: usize, scale: usize, split: Split) -> Result<PatchRecord> {
    let hr = cube.crop(origin.row, origin.col, patch, patch)?;
    let lr = degrade(&hr, scale)?;
    Ok(PatchRecord { hr, lr, origin, split })
}
