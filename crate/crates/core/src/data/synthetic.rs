//! Seeded synthetic scenes: a handful of blurred-noise "material" fields
//! mixed with smoothly varying spectral signatures, so neighbouring bands
//! are strongly correlated like real hyperspectral data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::cube::HyperCube;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticScene {
    pub bands: usize,
    pub height: usize,
    pub width: usize,
    /// Number of mixed spatial fields.
    pub materials: usize,
    /// Gaussian blur of the noise fields, in pixels.
    pub sigma: f64,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn new(bands: usize, height: usize, width: usize, seed: u64) -> Self {
        Self { bands, height, width, materials: 4, sigma: 1.5, seed }
    }

    pub fn generate(&self) -> HyperCube {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (h, w) = (self.height, self.width);
        let fields: Vec<Vec<f64>> = (0..self.materials)
            .map(|_| {
                let noise: Vec<f64> = (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
                standardize(blur(&noise, h, w, self.sigma))
            })
            .collect();
        // Each material gets a spectrum built from two random low-frequency
        // cosines over the band axis.
        let spectra: Vec<Vec<f64>> = (0..self.materials)
            .map(|_| {
                let (a, fa, pa) = (rng.gen_range(0.3..1.0), rng.gen_range(0.5..2.0), rng.gen_range(0.0..6.3));
                let (b, fb, pb) = (rng.gen_range(0.0..0.4), rng.gen_range(2.0..4.0), rng.gen_range(0.0..6.3));
                (0..self.bands)
                    .map(|k| {
                        let t = k as f64 / self.bands.max(1) as f64 * std::f64::consts::PI;
                        a * (fa * t + pa).cos() + b * (fb * t + pb).cos()
                    })
                    .collect()
            })
            .collect();
        let scale = 0.15 / (self.materials as f64).sqrt();
        HyperCube::from_fn("synthetic", self.bands, h, w, |band, y, x| {
            let v: f64 = (0..self.materials).map(|m| spectra[m][band] * fields[m][y * w + x]).sum();
            (0.5 + scale * v).clamp(0.0, 1.0) as f32
        })
    }
}

fn gaussian(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable blur with wrap-around borders.
fn blur(plane: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return plane.to_vec();
    }
    let k = gaussian(sigma);
    let r = (k.len() / 2) as isize;
    let wrap = |i: isize, n: usize| i.rem_euclid(n as isize) as usize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k.iter().enumerate().map(|(j, kv)| kv * plane[y * w + wrap(x as isize + j as isize - r, w)]).sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k.iter().enumerate().map(|(j, kv)| kv * tmp[wrap(y as isize + j as isize - r, h) * w + x]).sum();
        }
    }
    out
}

fn standardize(v: Vec<f64>) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
    v.into_iter().map(|x| (x - mean) / sd).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_bounded() {
        let s = SyntheticScene::new(12, 16, 20, 5);
        let a = s.generate();
        assert_eq!(a, s.generate());
        assert_ne!(a, SyntheticScene { seed: 6, ..s }.generate());
        assert!(a.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!((a.bands(), a.height(), a.width()), (12, 16, 20));
    }

    #[test]
    fn neighbouring_bands_correlate() {
        let c = SyntheticScene::new(30, 32, 32, 1).generate();
        let (p, q) = (c.band(10), c.band(11));
        let mean = |v: &[f32]| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64;
        let (mp, mq) = (mean(p), mean(q));
        let cov: f64 = p.iter().zip(q).map(|(&a, &b)| (a as f64 - mp) * (b as f64 - mq)).sum();
        let vp: f64 = p.iter().map(|&a| (a as f64 - mp).powi(2)).sum();
        let vq: f64 = q.iter().map(|&b| (b as f64 - mq).powi(2)).sum();
        assert!(cov / (vp * vq).sqrt() > 0.9);
    }
}
