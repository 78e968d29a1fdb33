//! Image quality metrics for hyperspectral predictions.
//!
//! All inputs are `bands × height × width` cubes compared band by band
//! (MPSNR, MSSIM, CC), pixel by pixel along the spectral axis (SAM), or
//! element by element (RMSE). Accumulation is in `f64`.

use std::fmt::Write as _;

use crate::data::HyperCube;
use crate::error::{Error, Result};

/// Per-band PSNR for an exact match.
pub const PSNR_CAP_DB: f64 = 100.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SAM_MIN_NORM: f64 = 1e-8;

fn check_pair(pred: &HyperCube, reference: &HyperCube) -> Result<()> {
    let dims = |c: &HyperCube| (c.bands(), c.height(), c.width());
    if dims(pred) != dims(reference) {
        return Err(Error::Shape(format!(
            "prediction {:?} and reference {:?} differ in shape",
            dims(pred),
            dims(reference)
        )));
    }
    if pred.values().is_empty() {
        return Err(Error::Shape("metrics of an empty cube".into()));
    }
    Ok(())
}

fn band_mse(p: &[f32], r: &[f32]) -> f64 {
    p.iter().zip(r).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum::<f64>() / p.len() as f64
}

/// Mean over bands of `10·log10(range² / MSE)`, each band capped at 100 dB.
pub fn mpsnr(pred: &HyperCube, reference: &HyperCube, data_range: f64) -> Result<f64> {
    check_pair(pred, reference)?;
    let bands = pred.bands();
    let total: f64 = (0..bands)
        .map(|b| {
            let mse = band_mse(pred.band(b), reference.band(b));
            if mse == 0.0 {
                PSNR_CAP_DB
            } else {
                (10.0 * (data_range * data_range / mse).log10()).min(PSNR_CAP_DB)
            }
        })
        .sum();
    Ok(total / bands as f64)
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering of an `h × w` plane with a 1-D window.
fn filter_valid(plane: &[f64], h: usize, w: usize, win: &[f64]) -> Vec<f64> {
    let k = win.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..k).map(|i| plane[y * w + x + i] * win[i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| tmp[(y + i) * ow + x] * win[i]).sum();
        }
    }
    out
}

fn band_ssim(p: &[f32], r: &[f32], h: usize, w: usize, data_range: f64, win: &[f64]) -> f64 {
    let c1 = (0.01 * data_range).powi(2);
    let c2 = (0.03 * data_range).powi(2);
    let x: Vec<f64> = p.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = r.iter().map(|&v| v as f64).collect();
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).collect::<Vec<f64>>();
    let mu_x = filter_valid(&x, h, w, win);
    let mu_y = filter_valid(&y, h, w, win);
    let xx = filter_valid(&prod(&x, &x), h, w, win);
    let yy = filter_valid(&prod(&y, &y), h, w, win);
    let xy = filter_valid(&prod(&x, &y), h, w, win);
    let n = mu_x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = xx[i] - mx * mx;
        let vy = yy[i] - my * my;
        let cov = xy[i] - mx * my;
        acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    acc / n as f64
}

/// Mean over bands of SSIM with an 11×11 Gaussian window (σ = 1.5) over the
/// valid region.
pub fn mssim(pred: &HyperCube, reference: &HyperCube, data_range: f64) -> Result<f64> {
    check_pair(pred, reference)?;
    let (h, w) = (pred.height(), pred.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM window {SSIM_WINDOW} exceeds the {h}x{w} image"
        )));
    }
    let win = gaussian_window();
    let total: f64 = (0..pred.bands())
        .map(|b| band_ssim(pred.band(b), reference.band(b), h, w, data_range, &win))
        .sum();
    Ok(total / pred.bands() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralAngle {
    pub mean_degrees: f64,
    /// Pixels skipped because one of the spectra is (near) zero.
    pub skipped: usize,
}

/// Mean spectral angle in degrees, skipping pixels whose spectrum norm is
/// below 1e-8 in either input.
pub fn sam_detailed(pred: &HyperCube, reference: &HyperCube) -> Result<SpectralAngle> {
    check_pair(pred, reference)?;
    let n = pred.height() * pred.width();
    let (pv, rv) = (pred.values(), reference.values());
    let mut total = 0.0;
    let mut counted = 0usize;
    for px in 0..n {
        let (mut dot, mut pp, mut rr) = (0.0, 0.0, 0.0);
        for b in 0..pred.bands() {
            let (p, r) = (pv[b * n + px] as f64, rv[b * n + px] as f64);
            dot += p * r;
            pp += p * p;
            rr += r * r;
        }
        let (np, nr) = (pp.sqrt(), rr.sqrt());
        if np < SAM_MIN_NORM || nr < SAM_MIN_NORM {
            continue;
        }
        total += (dot / (np * nr)).clamp(-1.0, 1.0).acos().to_degrees();
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::InvalidArgument("every pixel has a zero spectrum; SAM undefined".into()));
    }
    Ok(SpectralAngle { mean_degrees: total / counted as f64, skipped: n - counted })
}

pub fn sam(pred: &HyperCube, reference: &HyperCube) -> Result<f64> {
    Ok(sam_detailed(pred, reference)?.mean_degrees)
}

pub fn rmse(pred: &HyperCube, reference: &HyperCube) -> Result<f64> {
    check_pair(pred, reference)?;
    Ok(band_mse(pred.values(), reference.values()).sqrt())
}

fn pearson(p: &[f32], r: &[f32]) -> Option<f64> {
    let n = p.len() as f64;
    let mp = p.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mr = r.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut cov, mut vp, mut vr) = (0.0, 0.0, 0.0);
    for (&a, &b) in p.iter().zip(r) {
        let (da, db) = (a as f64 - mp, b as f64 - mr);
        cov += da * db;
        vp += da * da;
        vr += db * db;
    }
    (vp > 0.0 && vr > 0.0).then(|| cov / (vp * vr).sqrt())
}

/// Mean over bands of the Pearson correlation; constant bands are skipped.
pub fn cc(pred: &HyperCube, reference: &HyperCube) -> Result<f64> {
    check_pair(pred, reference)?;
    let values: Vec<f64> = (0..pred.bands()).filter_map(|b| pearson(pred.band(b), reference.band(b))).collect();
    if values.is_empty() {
        return Err(Error::InvalidArgument("every band is constant; CC undefined".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub mpsnr: f64,
    pub mssim: f64,
    pub sam: f64,
    pub rmse: f64,
    pub cc: f64,
}

impl MetricReport {
    /// All five metrics with `data_range = 1`.
    pub fn compute(pred: &HyperCube, reference: &HyperCube) -> Result<Self> {
        Ok(Self {
            mpsnr: mpsnr(pred, reference, 1.0)?,
            mssim: mssim(pred, reference, 1.0)?,
            sam: sam(pred, reference)?,
            rmse: rmse(pred, reference)?,
            cc: cc(pred, reference)?,
        })
    }

    /// Component-wise mean.
    pub fn mean(reports: &[MetricReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(Self {
            mpsnr: avg(|r| r.mpsnr),
            mssim: avg(|r| r.mssim),
            sam: avg(|r| r.sam),
            rmse: avg(|r| r.rmse),
            cc: avg(|r| r.cc),
        })
    }

    pub fn fields(&self) -> [(&'static str, f64); 5] {
        [("mpsnr", self.mpsnr), ("mssim", self.mssim), ("sam", self.sam), ("rmse", self.rmse), ("cc", self.cc)]
    }

    /// Human-readable `key: value` block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}: {v:.6}");
        }
        out
    }

    /// `mpsnr=<v> mssim=<v> sam=<v> rmse=<v> cc=<v>`
    pub fn kv_line(&self) -> String {
        self.fields().iter().map(|(k, v)| format!("{k}={v:.6}")).collect::<Vec<_>>().join(" ")
    }

    /// Scrapable `METRICS ...` line.
    pub fn metrics_line(&self) -> String {
        format!("METRICS {}", self.kv_line())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.fields().iter().zip(other.fields()).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max)
    }
}
