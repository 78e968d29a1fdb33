#![allow(dead_code)]

//! Brute-force reference metrics, written directly from the textbook
//! definitions, plus shared fixtures.

use ddsrnet::data::HyperCube;

fn get(c: &HyperCube, b: usize, y: usize, x: usize) -> f64 {
    c.at(b, y, x) as f64
}

pub fn psnr_oracle(p: &HyperCube, r: &HyperCube) -> f64 {
    let mut total = 0.0;
    for b in 0..p.bands() {
        let mut se = 0.0;
        for y in 0..p.height() {
            for x in 0..p.width() {
                se += (get(p, b, y, x) - get(r, b, y, x)).powi(2);
            }
        }
        let mse = se / (p.height() * p.width()) as f64;
        total += if mse == 0.0 { 100.0 } else { (10.0 * (1.0 / mse).log10()).min(100.0) };
    }
    total / p.bands() as f64
}

pub fn ssim_oracle(p: &HyperCube, r: &HyperCube) -> f64 {
    let n = 11;
    let sigma: f64 = 1.5;
    let mut win = vec![vec![0.0; n]; n];
    let mut norm = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            norm += *v;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut total = 0.0;
    for b in 0..p.bands() {
        let mut acc = 0.0;
        let mut count = 0;
        for y0 in 0..=p.height() - n {
            for x0 in 0..=p.width() - n {
                let (mut mx, mut my) = (0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let w = win[i][j] / norm;
                        mx += w * get(p, b, y0 + i, x0 + j);
                        my += w * get(r, b, y0 + i, x0 + j);
                    }
                }
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let w = win[i][j] / norm;
                        let (dx, dy) = (get(p, b, y0 + i, x0 + j) - mx, get(r, b, y0 + i, x0 + j) - my);
                        vx += w * dx * dx;
                        vy += w * dy * dy;
                        cxy += w * dx * dy;
                    }
                }
                acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total += acc / count as f64;
    }
    total / p.bands() as f64
}

pub fn sam_oracle(p: &HyperCube, r: &HyperCube) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    for y in 0..p.height() {
        for x in 0..p.width() {
            let a: Vec<f64> = (0..p.bands()).map(|b| get(p, b, y, x)).collect();
            let c: Vec<f64> = (0..p.bands()).map(|b| get(r, b, y, x)).collect();
            let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nc = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if na < 1e-8 || nc < 1e-8 {
                continue;
            }
            let cos = a.iter().zip(&c).map(|(u, v)| u * v).sum::<f64>() / (na * nc);
            total += cos.clamp(-1.0, 1.0).acos() * 180.0 / std::f64::consts::PI;
            count += 1;
        }
    }
    total / count as f64
}

pub fn rmse_oracle(p: &HyperCube, r: &HyperCube) -> f64 {
    let mut se = 0.0;
    for b in 0..p.bands() {
        for y in 0..p.height() {
            for x in 0..p.width() {
                se += (get(p, b, y, x) - get(r, b, y, x)).powi(2);
            }
        }
    }
    (se / (p.bands() * p.height() * p.width()) as f64).sqrt()
}

pub fn cc_oracle(p: &HyperCube, r: &HyperCube) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    let n = (p.height() * p.width()) as f64;
    for b in 0..p.bands() {
        let xs: Vec<(f64, f64)> = (0..p.height())
            .flat_map(|y| (0..p.width()).map(move |x| (y, x)))
            .map(|(y, x)| (get(p, b, y, x), get(r, b, y, x)))
            .collect();
        let (ma, mb) = (xs.iter().map(|v| v.0).sum::<f64>() / n, xs.iter().map(|v| v.1).sum::<f64>() / n);
        let cov: f64 = xs.iter().map(|(a, c)| (a - ma) * (c - mb)).sum();
        let va: f64 = xs.iter().map(|(a, _)| (a - ma).powi(2)).sum();
        let vb: f64 = xs.iter().map(|(_, c)| (c - mb).powi(2)).sum();
        if va > 0.0 && vb > 0.0 {
            total += cov / (va * vb).sqrt();
            count += 1;
        }
    }
    total / count as f64
}

/// Seeded random cube with values in `[0, 1)`.
pub fn random_cube(bands: usize, h: usize, w: usize, seed: u64) -> HyperCube {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    HyperCube::from_fn("r", bands, h, w, |_, _, _| rng.gen_range(0.0..1.0))
}

/// A reference and a noisy, slightly biased copy of it.
pub fn metric_pair(seed: u64) -> (HyperCube, HyperCube) {
    use rand::{Rng, SeedableRng};
    let reference = random_cube(3, 16, 16, seed);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let pred = HyperCube::from_fn("p", 3, 16, 16, |b, y, x| {
        (reference.at(b, y, x) * 0.9 + rng.gen_range(-0.1..0.1) + 0.05).clamp(0.0, 1.0)
    });
    (pred, reference)
}
