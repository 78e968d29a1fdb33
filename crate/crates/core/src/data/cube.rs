//! Hyperspectral cubes and the `HSR1` container.
//!
//! `HSR1` layout, little-endian throughout:
//!
//! ```text
//! "HSR1"  u32 version  u32 bands  u32 height  u32 width  u32 original_bands
//! bands × height × width f32 values, band-major then row-major
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

pub const MAGIC: &[u8; 4] = b"HSR1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// One hyperspectral scene, `bands × height × width`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperCube {
    pub name: String,
    bands: usize,
    height: usize,
    width: usize,
    /// Band count before any padding.
    original_bands: usize,
    values: Vec<f32>,
}

impl HyperCube {
    pub fn new(name: impl Into<String>, bands: usize, height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        Self::with_original(name, bands, height, width, bands, values)
    }

    pub fn with_original(
        name: impl Into<String>,
        bands: usize,
        height: usize,
        width: usize,
        original_bands: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != bands * height * width {
            return Err(Error::Shape(format!(
                "{} values for a {bands}x{height}x{width} cube",
                values.len()
            )));
        }
        if original_bands > bands {
            return Err(Error::Shape(format!("original band count {original_bands} exceeds {bands} stored bands")));
        }
        Ok(Self { name: name.into(), bands, height, width, original_bands, values })
    }

    pub fn from_fn(
        name: impl Into<String>,
        bands: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut values = Vec::with_capacity(bands * height * width);
        for b in 0..bands {
            for y in 0..height {
                for x in 0..width {
                    values.push(f(b, y, x));
                }
            }
        }
        Self { name: name.into(), bands, height, width, original_bands: bands, values }
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn original_bands(&self) -> usize {
        self.original_bands
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn band(&self, b: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.values[b * n..(b + 1) * n]
    }

    pub fn at(&self, b: usize, y: usize, x: usize) -> f32 {
        self.values[(b * self.height + y) * self.width + x]
    }

    /// `(1, bands, height, width)` tensor view.
    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::from_vec(Shape::new(1, self.bands, self.height, self.width), self.values.clone())
            .expect("cube invariant")
    }

    /// Cube from sample `b` of a tensor.
    pub fn from_tensor(name: impl Into<String>, t: &Tensor<f32>, b: usize) -> Result<Self> {
        let s = t.shape();
        if b >= s.batch {
            return Err(Error::Shape(format!("sample {b} out of range for {s}")));
        }
        let n = s.channels * s.plane();
        Self::new(name, s.channels, s.height, s.width, t.data()[b * n..(b + 1) * n].to_vec())
    }

    /// Spatial window `[row, row + h) × [col, col + w)` of every band.
    pub fn crop(&self, row: usize, col: usize, h: usize, w: usize) -> Result<Self> {
        if row + h > self.height || col + w > self.width {
            return Err(Error::InvalidArgument(format!(
                "window {h}x{w} at ({row}, {col}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut values = Vec::with_capacity(self.bands * h * w);
        for b in 0..self.bands {
            let band = self.band(b);
            for y in row..row + h {
                values.extend_from_slice(&band[y * self.width + col..y * self.width + col + w]);
            }
        }
        Ok(Self { name: self.name.clone(), bands: self.bands, height: h, width: w, original_bands: self.original_bands, values })
    }

    /// Bands `start..start + count`, as a cube whose original count is `count`.
    pub fn select_bands(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.bands {
            return Err(Error::InvalidArgument(format!(
                "bands {start}..{} out of range for {} bands",
                start + count,
                self.bands
            )));
        }
        let n = self.height * self.width;
        Ok(Self {
            name: self.name.clone(),
            bands: count,
            height: self.height,
            width: self.width,
            original_bands: count,
            values: self.values[start * n..(start + count) * n].to_vec(),
        })
    }

    /// Drop padded bands.
    pub fn strip_padding(&self) -> Self {
        let mut out = self.select_bands(0, self.original_bands).expect("original ≤ bands");
        out.name = self.name.clone();
        out
    }

    pub fn clamp(&self, lo: f32, hi: f32) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.values.len() * 4);
        out.extend_from_slice(MAGIC);
        for v in [VERSION, self.bands as u32, self.height as u32, self.width as u32, self.original_bands as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(name: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!("HSR1 header truncated ({} bytes)", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("not an HSR1 cube (bad magic)".into()));
        }
        let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        let (version, bands, height, width, original) = (field(0), field(1), field(2), field(3), field(4));
        if version != VERSION as usize {
            return Err(Error::Format(format!("unsupported HSR1 version {version}")));
        }
        let expected = bands
            .checked_mul(height)
            .and_then(|n| n.checked_mul(width))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Format(format!("HSR1 dimensions {bands}x{height}x{width} overflow")))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "HSR1 header declares {expected} data bytes but the file holds {}",
                payload.len()
            )));
        }
        if original > bands {
            return Err(Error::Format(format!("HSR1 original band count {original} exceeds {bands}")));
        }
        let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Self::with_original(name, bands, height, width, original, values)
    }
}

pub fn save_cube(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, cube.to_bytes())?;
    Ok(())
}

/// Load an `HSR1` file; the cube is named after the file stem.
pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    let path = path.as_ref();
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    HyperCube::from_bytes(name, &fs::read(path)?)
}

/// Global min-max affine map to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn apply(&self, v: f32) -> f32 {
        (((v as f64 - self.min) / (self.max - self.min)) as f32).clamp(0.0, 1.0)
    }

    pub fn invert(&self, v: f32) -> f32 {
        (v as f64 * (self.max - self.min) + self.min) as f32
    }

    pub fn invert_cube(&self, cube: &HyperCube) -> HyperCube {
        let mut out = cube.clone();
        out.values.iter_mut().for_each(|v| *v = self.invert(*v));
        out
    }
}

/// Scale the whole cube (all bands jointly) into `[0, 1]`.
pub fn normalize(cube: &HyperCube) -> Result<(HyperCube, Normalization)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in &cube.values {
        if !v.is_finite() {
            return Err(Error::Numeric(format!("cube {} contains a non-finite value", cube.name)));
        }
        min = min.min(v as f64);
        max = max.max(v as f64);
    }
    if cube.values.is_empty() || max <= min {
        return Err(Error::InvalidArgument(format!("cube {} is constant and cannot be normalised", cube.name)));
    }
    let norm = Normalization { min, max };
    let mut out = cube.clone();
    out.values.iter_mut().for_each(|v| *v = norm.apply(*v));
    Ok((out, norm))
}

/// Smallest multiple of `group` that holds `bands`.
pub fn pad_target(bands: usize, group: usize) -> usize {
    bands.div_ceil(group) * group
}

/// Append copies of the last band until there are `target` bands.
pub fn pad_bands(cube: &HyperCube, target: usize, group: usize) -> Result<HyperCube> {
    if target < cube.bands {
        return Err(Error::InvalidArgument(format!(
            "pad target {target} is smaller than the {} bands present",
            cube.bands
        )));
    }
    if target - cube.bands >= group {
        return Err(Error::InvalidArgument(format!(
            "pad target {target} adds {} bands; fewer than {group} allowed",
            target - cube.bands
        )));
    }
    if cube.bands == 0 {
        return Err(Error::InvalidArgument("cannot pad a cube without bands".into()));
    }
    let mut out = cube.clone();
    let last = cube.band(cube.bands - 1).to_vec();
    for _ in cube.bands..target {
        out.values.extend_from_slice(&last);
    }
    out.bands = target;
    Ok(out)
}

/// Split into contiguous, non-overlapping groups of `group` bands.
pub fn group_bands(cube: &HyperCube, group: usize) -> Result<Vec<HyperCube>> {
    if group == 0 || cube.bands % group != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} bands cannot be split into groups of {group}; pad to {} first",
            cube.bands,
            pad_target(cube.bands, group.max(1))
        )));
    }
    (0..cube.bands / group).map(|g| cube.select_bands(g * group, group)).collect()
}

/// Concatenate groups in order and keep the first `original_bands`.
pub fn ungroup(groups: &[HyperCube], original_bands: usize) -> Result<HyperCube> {
    let first = groups.first().ok_or_else(|| Error::InvalidArgument("no groups to join".into()))?;
    let (h, w) = (first.height, first.width);
    let mut values = Vec::new();
    let mut bands = 0;
    for g in groups {
        if (g.height, g.width) != (h, w) {
            return Err(Error::Shape(format!("group {}x{} does not match {h}x{w}", g.height, g.width)));
        }
        values.extend_from_slice(&g.values);
        bands += g.bands;
    }
    if original_bands > bands {
        return Err(Error::Shape(format!("{original_bands} original bands but only {bands} grouped")));
    }
    values.truncate(original_bands * h * w);
    HyperCube::new(first.name.clone(), original_bands, h, w, values)
}

/// Centred `size × size` window with floor offsets.
pub fn center_crop(cube: &HyperCube, size: usize) -> Result<HyperCube> {
    if size > cube.height || size > cube.width {
        return Err(Error::InvalidArgument(format!(
            "crop size {size} exceeds {}x{}",
            cube.height, cube.width
        )));
    }
    let (row, col) = center_offsets(cube.height, cube.width, size);
    cube.crop(row, col, size, size)
}

pub fn center_offsets(height: usize, width: usize, size: usize) -> (usize, usize) {
    ((height - size) / 2, (width - size) / 2)
}
