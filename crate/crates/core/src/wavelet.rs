//! Single-level orthonormal 2-D Haar analysis and synthesis.
//!
//! Each non-overlapping 2x2 block `[[a, b], [c, d]]` maps to
//!
//! ```text
//! LL = (a + b + c + d) / 2      LH = (a + b - c - d) / 2
//! HL = (a - b + c - d) / 2      HH = (a - b - c + d) / 2
//! ```
//!
//! The block matrix is symmetric and orthogonal, so synthesis applies the
//! same signs and the transform preserves energy. The adjoint of analysis is
//! synthesis, which is what the backward pass uses.

use crate::error::{Error, Result};
use crate::tensor::{Real, Shape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subband {
    LL,
    LH,
    HL,
    HH,
}

impl Subband {
    pub const ALL: [Subband; 4] = [Subband::LL, Subband::LH, Subband::HL, Subband::HH];
    /// Detail subbands in stacking order.
    pub const DETAILS: [Subband; 3] = [Subband::LH, Subband::HL, Subband::HH];

    /// Signs applied to `(a, b, c, d)`.
    fn signs(self) -> [f64; 4] {
        match self {
            Subband::LL => [1.0, 1.0, 1.0, 1.0],
            Subband::LH => [1.0, 1.0, -1.0, -1.0],
            Subband::HL => [1.0, -1.0, 1.0, -1.0],
            Subband::HH => [1.0, -1.0, -1.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subband::LL => "ll",
            Subband::LH => "lh",
            Subband::HL => "hl",
            Subband::HH => "hh",
        }
    }
}

/// One approximation subband plus the three detail subbands, all at half
/// the spatial resolution of the analysed tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid<T> {
    pub ll: Tensor<T>,
    /// `LH`, `HL`, `HH`, in that order.
    pub high: [Tensor<T>; 3],
}

impl<T: Real> WaveletPyramid<T> {
    pub fn band(&self, band: Subband) -> &Tensor<T> {
        match band {
            Subband::LL => &self.ll,
            Subband::LH => &self.high[0],
            Subband::HL => &self.high[1],
            Subband::HH => &self.high[2],
        }
    }

    pub fn energy(&self) -> T {
        self.ll.sum_sq() + self.high.iter().map(Tensor::sum_sq).sum::<T>()
    }

    fn check_consistent(&self) -> Result<Shape> {
        let s = self.ll.shape();
        for (t, band) in self.high.iter().zip(Subband::DETAILS) {
            if t.shape() != s {
                return Err(Error::Shape(format!(
                    "subband {} has shape {} but LL has {s}",
                    band.name(),
                    t.shape()
                )));
            }
        }
        Ok(s)
    }
}

fn half_shape(s: Shape) -> Result<Shape> {
    if s.height % 2 != 0 || s.width % 2 != 0 {
        return Err(Error::Dimension(format!(
            "Haar analysis needs even height and width, got {}x{}",
            s.height, s.width
        )));
    }
    Ok(Shape::new(s.batch, s.channels, s.height / 2, s.width / 2))
}

/// Analysis restricted to one subband.
pub fn analyze_band<T: Real>(x: &Tensor<T>, band: Subband) -> Result<Tensor<T>> {
    let s = x.shape();
    let hs = half_shape(s)?;
    let half = T::from_f64_lossy(0.5);
    let [sa, sb, sc, sd] = band.signs().map(T::from_f64_lossy);
    let mut out = Tensor::zeros(hs);
    for b in 0..s.batch {
        for c in 0..s.channels {
            let src = x.plane(b, c);
            let dst = out.plane_mut(b, c);
            for i in 0..hs.height {
                let top = &src[2 * i * s.width..(2 * i + 1) * s.width];
                let bot = &src[(2 * i + 1) * s.width..(2 * i + 2) * s.width];
                for j in 0..hs.width {
                    let (a, bb, cc, d) = (top[2 * j], top[2 * j + 1], bot[2 * j], bot[2 * j + 1]);
                    dst[i * hs.width + j] = (sa * a + sb * bb + sc * cc + sd * d) * half;
                }
            }
        }
    }
    Ok(out)
}

/// Synthesis from a single subband (all others zero); also the adjoint of
/// [`analyze_band`]. Accumulates into `out`.
pub fn synthesize_band_into<T: Real>(coeffs: &Tensor<T>, band: Subband, out: &mut Tensor<T>) -> Result<()> {
    let hs = coeffs.shape();
    let s = Shape::new(hs.batch, hs.channels, hs.height * 2, hs.width * 2);
    if out.shape() != s {
        return Err(Error::Shape(format!(
            "synthesis target {} does not match subband {}",
            out.shape(),
            hs
        )));
    }
    let half = T::from_f64_lossy(0.5);
    let [sa, sb, sc, sd] = band.signs().map(T::from_f64_lossy);
    for b in 0..hs.batch {
        for c in 0..hs.channels {
            let src = coeffs.plane(b, c);
            let dst = out.plane_mut(b, c);
            for i in 0..hs.height {
                for j in 0..hs.width {
                    let v = src[i * hs.width + j] * half;
                    let top = 2 * i * s.width + 2 * j;
                    let bot = top + s.width;
                    dst[top] += sa * v;
                    dst[top + 1] += sb * v;
                    dst[bot] += sc * v;
                    dst[bot + 1] += sd * v;
                }
            }
        }
    }
    Ok(())
}

/// Single-level Haar analysis. Rejects odd spatial dimensions.
pub fn dwt2_haar<T: Real>(x: &Tensor<T>) -> Result<WaveletPyramid<T>> {
    let s = x.shape();
    let hs = half_shape(s)?;
    let half = T::from_f64_lossy(0.5);
    let mut ll = Tensor::zeros(hs);
    let mut high = [Tensor::zeros(hs), Tensor::zeros(hs), Tensor::zeros(hs)];
    for b in 0..s.batch {
        for c in 0..s.channels {
            let src = x.plane(b, c);
            let base = ll.index(b, c, 0, 0);
            for i in 0..hs.height {
                let top = &src[2 * i * s.width..(2 * i + 1) * s.width];
                let bot = &src[(2 * i + 1) * s.width..(2 * i + 2) * s.width];
                for j in 0..hs.width {
                    let (a, bb, cc, d) = (top[2 * j], top[2 * j + 1], bot[2 * j], bot[2 * j + 1]);
                    let k = base + i * hs.width + j;
                    ll.data_mut()[k] = (a + bb + cc + d) * half;
                    high[0].data_mut()[k] = (a + bb - cc - d) * half;
                    high[1].data_mut()[k] = (a - bb + cc - d) * half;
                    high[2].data_mut()[k] = (a - bb - cc + d) * half;
                }
            }
        }
    }
    Ok(WaveletPyramid { ll, high })
}

/// Single-level Haar synthesis, the exact inverse of [`dwt2_haar`].
pub fn idwt2_haar<T: Real>(p: &WaveletPyramid<T>) -> Result<Tensor<T>> {
    let hs = p.check_consistent()?;
    let s = Shape::new(hs.batch, hs.channels, hs.height * 2, hs.width * 2);
    let half = T::from_f64_lossy(0.5);
    let mut out = Tensor::zeros(s);
    let [lh, hl, hh] = &p.high;
    for b in 0..hs.batch {
        for c in 0..hs.channels {
            let base = p.ll.index(b, c, 0, 0);
            let dst = out.plane_mut(b, c);
            for i in 0..hs.height {
                for j in 0..hs.width {
                    let k = base + i * hs.width + j;
                    let (l, v, h, d) = (p.ll.data()[k], lh.data()[k], hl.data()[k], hh.data()[k]);
                    let top = 2 * i * s.width + 2 * j;
                    let bot = top + s.width;
                    dst[top] = (l + v + h + d) * half;
                    dst[top + 1] = (l + v - h - d) * half;
                    dst[bot] = (l - v + h - d) * half;
                    dst[bot + 1] = (l - v - h + d) * half;
                }
            }
        }
    }
    Ok(out)
}
