//! Separable bicubic (Catmull-Rom, `a = -0.5`) resampling with half-pixel
//! centres. Downscaling widens the kernel by the scale factor so it
//! integrates over the source footprint; borders replicate the edge sample.

use crate::data::cube::HyperCube;
use crate::error::{Error, Result};

const A: f64 = -0.5;

pub fn cubic_kernel(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Per output sample: source indices and normalised weights.
fn axis_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = n_in as f64 / n_out as f64;
    let support = ratio.max(1.0);
    (0..n_out)
        .map(|o| {
            let center = (o as f64 + 0.5) * ratio - 0.5;
            let lo = (center - 2.0 * support).floor() as isize;
            let hi = (center + 2.0 * support).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = Vec::new();
            for i in lo..=hi {
                let w = cubic_kernel((center - i as f64) / support);
                if w == 0.0 {
                    continue;
                }
                let idx = i.clamp(0, n_in as isize - 1) as usize;
                match taps.iter_mut().find(|(j, _)| *j == idx) {
                    Some(t) => t.1 += w,
                    None => taps.push((idx, w)),
                }
            }
            let total: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= total);
            taps
        })
        .collect()
}

/// Resample one `h × w` plane to `out_h × out_w`.
pub fn resize_plane(plane: &[f32], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f32> {
    let cols = axis_weights(w, out_w);
    let rows = axis_weights(h, out_h);
    let mut tmp = vec![0.0f64; h * out_w];
    for y in 0..h {
        let line = &plane[y * w..(y + 1) * w];
        for (o, taps) in cols.iter().enumerate() {
            tmp[y * out_w + o] = taps.iter().map(|&(i, wt)| line[i] as f64 * wt).sum();
        }
    }
    let mut out = vec![0.0f32; out_h * out_w];
    for (oy, taps) in rows.iter().enumerate() {
        for ox in 0..out_w {
            out[oy * out_w + ox] = taps.iter().map(|&(i, wt)| tmp[i * out_w + ox] * wt).sum::<f64>() as f32;
        }
    }
    out
}

fn resize_cube(cube: &HyperCube, out_h: usize, out_w: usize) -> HyperCube {
    let mut values = Vec::with_capacity(cube.bands() * out_h * out_w);
    for b in 0..cube.bands() {
        values.extend(resize_plane(cube.band(b), cube.height(), cube.width(), out_h, out_w));
    }
    HyperCube::with_original(cube.name.clone(), cube.bands(), out_h, out_w, cube.original_bands(), values)
        .expect("sizes agree")
}

/// Bicubic downsampling of a normalised patch by `scale`, clamped to `[0, 1]`.
pub fn degrade(hr: &HyperCube, scale: usize) -> Result<HyperCube> {
    if scale == 0 || hr.height() % scale != 0 || hr.width() % scale != 0 {
        return Err(Error::InvalidArgument(format!(
            "{}x{} patch is not divisible by scale {scale}",
            hr.height(),
            hr.width()
        )));
    }
    if scale == 1 {
        return Ok(hr.clone());
    }
    Ok(resize_cube(hr, hr.height() / scale, hr.width() / scale).clamp(0.0, 1.0))
}

/// Bicubic upsampling by `scale`; the interpolation baseline.
pub fn bicubic_upsample(lr: &HyperCube, scale: usize) -> Result<HyperCube> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be at least 1".into()));
    }
    if scale == 1 {
        return Ok(lr.clone());
    }
    Ok(resize_cube(lr, lr.height() * scale, lr.width() * scale))
}
