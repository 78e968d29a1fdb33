//! Forward kernels and their exact adjoints.
//!
//! Every operator here is a pure function of its inputs. Backward kernels
//! take the upstream gradient and return the gradient of each input; the
//! autograd tape in [`crate::autograd`] wires them together.

use crate::error::{shape_err, Error, Result};
use crate::tensor::{Real, Shape, Tensor};

/// Side length of the only supported convolution kernel.
pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

fn check_conv_shapes<T: Real>(x: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<()> {
    let ws = weight.shape();
    if ws.height != KERNEL || ws.width != KERNEL {
        return shape_err(format!("conv2d expects a 3x3 kernel, got weight {ws}"));
    }
    if x.shape().channels != ws.channels {
        return shape_err(format!(
            "conv2d input has {} channels but weight {ws} expects {}",
            x.shape().channels,
            ws.channels
        ));
    }
    if bias.shape() != Shape::new(1, ws.batch, 1, 1) {
        return shape_err(format!("conv2d bias {} does not match {} output channels", bias.shape(), ws.batch));
    }
    Ok(())
}

/// Lay out the zero-padded 3x3 neighbourhoods of one sample as a
/// `(cin * 9) × (h * w)` matrix.
fn im2col<T: Real>(x: &[T], cin: usize, h: usize, w: usize, cols: &mut [T]) {
    let hw = h * w;
    for c in 0..cin {
        let plane = &x[c * hw..(c + 1) * hw];
        for u in 0..KERNEL {
            for v in 0..KERNEL {
                let row = &mut cols[(c * TAPS + u * KERNEL + v) * hw..][..hw];
                let dy = u as isize - 1;
                let dx = v as isize - 1;
                let j_lo = (-dx).max(0) as usize;
                let j_hi = (w as isize - dx).min(w as isize) as usize;
                for i in 0..h {
                    let dst = &mut row[i * w..(i + 1) * w];
                    let yi = i as isize + dy;
                    if yi < 0 || yi >= h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src = &plane[yi as usize * w..(yi as usize + 1) * w];
                    dst[..j_lo].fill(T::zero());
                    dst[j_hi..].fill(T::zero());
                    let s0 = (j_lo as isize + dx) as usize;
                    dst[j_lo..j_hi].copy_from_slice(&src[s0..s0 + (j_hi - j_lo)]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back into the image.
fn col2im<T: Real>(cols: &[T], cin: usize, h: usize, w: usize, x: &mut [T]) {
    let hw = h * w;
    for c in 0..cin {
        let plane = &mut x[c * hw..(c + 1) * hw];
        for u in 0..KERNEL {
            for v in 0..KERNEL {
                let row = &cols[(c * TAPS + u * KERNEL + v) * hw..][..hw];
                let dy = u as isize - 1;
                let dx = v as isize - 1;
                let j_lo = (-dx).max(0) as usize;
                let j_hi = (w as isize - dx).min(w as isize) as usize;
                for i in 0..h {
                    let yi = i as isize + dy;
                    if yi < 0 || yi >= h as isize {
                        continue;
                    }
                    let s0 = (j_lo as isize + dx) as usize;
                    let dst = &mut plane[yi as usize * w + s0..][..j_hi - j_lo];
                    for (d, &g) in dst.iter_mut().zip(&row[i * w + j_lo..i * w + j_hi]) {
                        *d += g;
                    }
                }
            }
        }
    }
}

/// 3x3 convolution, stride 1, zero padding 1.
///
/// `weight` has shape `(cout, cin, 3, 3)` and `bias` has shape `(1, cout, 1, 1)`.
pub fn conv2d<T: Real>(x: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    check_conv_shapes(x, weight, bias)?;
    let s = x.shape();
    let cout = weight.shape().batch;
    let (cin, hw) = (s.channels, s.plane());
    let k = cin * TAPS;

    let mut out = Tensor::zeros(Shape::new(s.batch, cout, s.height, s.width));
    let mut cols = vec![T::zero(); k * hw];
    for b in 0..s.batch {
        im2col(&x.data()[b * cin * hw..(b + 1) * cin * hw], cin, s.height, s.width, &mut cols);
        let out_b = &mut out.data_mut()[b * cout * hw..(b + 1) * cout * hw];
        for (o, row) in out_b.chunks_exact_mut(hw).enumerate() {
            row.fill(bias.data()[o]);
        }
        T::gemm(cout, k, hw, weight.data(), false, &cols, false, T::one(), out_b);
    }
    Ok(out)
}

pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let s = x.shape();
    let ws = weight.shape();
    let cout = ws.batch;
    if grad_out.shape() != Shape::new(s.batch, cout, s.height, s.width) {
        return shape_err(format!("conv2d upstream gradient has shape {}", grad_out.shape()));
    }
    let (cin, hw) = (s.channels, s.plane());
    let k = cin * TAPS;

    let mut g_input = Tensor::zeros(s);
    let mut g_weight = Tensor::zeros(ws);
    let mut g_bias = Tensor::zeros(Shape::new(1, cout, 1, 1));
    let mut cols = vec![T::zero(); k * hw];
    let mut g_cols = vec![T::zero(); k * hw];
    for b in 0..s.batch {
        im2col(&x.data()[b * cin * hw..(b + 1) * cin * hw], cin, s.height, s.width, &mut cols);
        let g_out_b = &grad_out.data()[b * cout * hw..(b + 1) * cout * hw];

        T::gemm(cout, hw, k, g_out_b, false, &cols, true, T::one(), g_weight.data_mut());
        for (gb, row) in g_bias.data_mut().iter_mut().zip(g_out_b.chunks_exact(hw)) {
            *gb += row.iter().copied().sum::<T>();
        }

        T::gemm(k, cout, hw, weight.data(), true, g_out_b, false, T::zero(), &mut g_cols);
        col2im(&g_cols, cin, s.height, s.width, &mut g_input.data_mut()[b * cin * hw..(b + 1) * cin * hw]);
    }
    Ok(ConvGrads { input: g_input, weight: g_weight, bias: g_bias })
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Subgradient at exactly zero is taken as 0.
pub fn relu_backward<T: Real>(x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    x.zip_map(grad_out, |v, g| if v > T::zero() { g } else { T::zero() })
}

/// Two-tap interpolation rule for one output coordinate.
#[derive(Clone, Copy, Debug)]
struct Tap<T> {
    lo: usize,
    hi: usize,
    frac: T,
}

/// Half-pixel-centre sampling positions for upsampling an axis of length
/// `n` by `scale`, clamped to the valid range.
fn bilinear_taps<T: Real>(n: usize, scale: usize) -> Vec<Tap<T>> {
    let last = (n - 1) as f64;
    (0..n * scale)
        .map(|o| {
            let src = ((o as f64 + 0.5) / scale as f64 - 0.5).clamp(0.0, last);
            let lo = src.floor() as usize;
            Tap { lo, hi: (lo + 1).min(n - 1), frac: T::from_f64_lossy(src - lo as f64) }
        })
        .collect()
}

/// Bilinear upsampling by an integer factor with half-pixel centres and
/// edge clamping. `scale == 1` returns the input unchanged.
pub fn bilinear_upsample<T: Real>(x: &Tensor<T>, scale: usize) -> Result<Tensor<T>> {
    if scale == 0 {
        return Err(Error::InvalidArgument("upsampling factor must be at least 1".into()));
    }
    let s = x.shape();
    if scale == 1 {
        return Ok(x.clone());
    }
    if s.height == 0 || s.width == 0 {
        return shape_err(format!("cannot upsample empty planes of shape {s}"));
    }
    let (oh, ow) = (s.height * scale, s.width * scale);
    let row_taps = bilinear_taps::<T>(s.height, scale);
    let col_taps = bilinear_taps::<T>(s.width, scale);

    let mut out = Tensor::zeros(Shape::new(s.batch, s.channels, oh, ow));
    let mut tmp = vec![T::zero(); s.height * ow];
    for b in 0..s.batch {
        for c in 0..s.channels {
            let src = x.plane(b, c);
            for y in 0..s.height {
                let line = &src[y * s.width..(y + 1) * s.width];
                for (o, t) in col_taps.iter().enumerate() {
                    tmp[y * ow + o] = line[t.lo] * (T::one() - t.frac) + line[t.hi] * t.frac;
                }
            }
            let dst = out.plane_mut(b, c);
            for (oy, t) in row_taps.iter().enumerate() {
                let (lo, hi) = (&tmp[t.lo * ow..(t.lo + 1) * ow], &tmp[t.hi * ow..(t.hi + 1) * ow]);
                for (ox, d) in dst[oy * ow..(oy + 1) * ow].iter_mut().enumerate() {
                    *d = lo[ox] * (T::one() - t.frac) + hi[ox] * t.frac;
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`bilinear_upsample`] with respect to its input.
pub fn bilinear_upsample_backward<T: Real>(
    input_shape: Shape,
    scale: usize,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let s = input_shape;
    let (oh, ow) = (s.height * scale, s.width * scale);
    if grad_out.shape() != Shape::new(s.batch, s.channels, oh, ow) {
        return shape_err(format!("upsample upstream gradient has shape {}", grad_out.shape()));
    }
    if scale == 1 {
        return Ok(grad_out.clone());
    }
    let row_taps = bilinear_taps::<T>(s.height, scale);
    let col_taps = bilinear_taps::<T>(s.width, scale);

    let mut grad_in = Tensor::zeros(s);
    let mut tmp = vec![T::zero(); s.height * ow];
    for b in 0..s.batch {
        for c in 0..s.channels {
            tmp.fill(T::zero());
            let g = grad_out.plane(b, c);
            for (oy, t) in row_taps.iter().enumerate() {
                for ox in 0..ow {
                    let v = g[oy * ow + ox];
                    tmp[t.lo * ow + ox] += v * (T::one() - t.frac);
                    tmp[t.hi * ow + ox] += v * t.frac;
                }
            }
            let dst = grad_in.plane_mut(b, c);
            for y in 0..s.height {
                for (o, t) in col_taps.iter().enumerate() {
                    let v = tmp[y * ow + o];
                    dst[y * s.width + t.lo] += v * (T::one() - t.frac);
                    dst[y * s.width + t.hi] += v * t.frac;
                }
            }
        }
    }
    Ok(grad_in)
}

/// Mean Huber loss between `pred` and `target`.
pub fn huber<T: Real>(pred: &Tensor<T>, target: &Tensor<T>, delta: T) -> Result<T> {
    pred.ensure_same_shape(target, "huber")?;
    if pred.is_empty() {
        return shape_err("huber loss of an empty tensor");
    }
    let half = T::from_f64_lossy(0.5);
    let total: T = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let e = (p - t).abs();
            if e <= delta {
                half * e * e
            } else {
                delta * (e - half * delta)
            }
        })
        .sum();
    Ok(total / T::from_usize(pred.len()).unwrap())
}

/// Gradient of [`huber`] with respect to `pred`, scaled by `upstream`.
pub fn huber_backward<T: Real>(pred: &Tensor<T>, target: &Tensor<T>, delta: T, upstream: T) -> Result<Tensor<T>> {
    let scale = upstream / T::from_usize(pred.len()).unwrap();
    pred.zip_map(target, |p, t| (p - t).max(-delta).min(delta) * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t64(shape: [usize; 4], data: Vec<f64>) -> Tensor<f64> {
        Tensor::from_vec(shape, data).unwrap()
    }

    #[test]
    fn conv_identity_kernel_is_identity() {
        let x = Tensor::<f64>::from_fn([2, 1, 4, 5], |[b, _, y, x]| (b * 31 + y * 7 + x) as f64 * 0.1);
        let mut w = Tensor::zeros([1, 1, 3, 3]);
        w.data_mut()[4] = 1.0;
        let out = conv2d(&x, &w, &Tensor::zeros([1, 1, 1, 1])).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn conv_all_ones_window_sums() {
        let x = Tensor::<f64>::full([1, 1, 3, 3], 1.0);
        let w = Tensor::full([1, 1, 3, 3], 1.0);
        let out = conv2d(&x, &w, &Tensor::zeros([1, 1, 1, 1])).unwrap();
        assert_eq!(out.at(0, 0, 1, 1), 9.0);
        for (y, x) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            assert_eq!(out.at(0, 0, y, x), 4.0);
        }
        assert_eq!(out.at(0, 0, 0, 1), 6.0);
    }

    #[test]
    fn conv_zero_input_yields_bias() {
        let x = Tensor::<f32>::zeros([1, 2, 4, 4]);
        let w = Tensor::full([3, 2, 3, 3], 0.7);
        let bias = Tensor::from_vec([1, 3, 1, 1], vec![0.5, -1.0, 2.0]).unwrap();
        let out = conv2d(&x, &w, &bias).unwrap();
        for c in 0..3 {
            assert!(out.plane(0, c).iter().all(|&v| v == bias.data()[c]));
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let x = Tensor::<f32>::zeros([1, 2, 4, 4]);
        let w = Tensor::zeros([1, 3, 3, 3]);
        assert!(matches!(conv2d(&x, &w, &Tensor::zeros([1, 1, 1, 1])), Err(Error::Shape(_))));
    }

    #[test]
    fn relu_examples() {
        let x = t64([1, 1, 1, 3], vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&x, &Tensor::full([1, 1, 1, 3], 1.0)).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn upsample_identity_and_constants() {
        let x = Tensor::<f32>::from_fn([1, 2, 3, 4], |[_, c, y, x]| (c + y * x) as f32 * 0.3);
        assert_eq!(bilinear_upsample(&x, 1).unwrap(), x);
        let k = Tensor::<f32>::full([1, 1, 3, 5], 0.625);
        for s in [2, 3, 4, 8] {
            let up = bilinear_upsample(&k, s).unwrap();
            assert_eq!(up.shape(), Shape::new(1, 1, 3 * s, 5 * s));
            assert!(up.data().iter().all(|&v| (v - 0.625).abs() < 1e-7));
        }
        assert!(matches!(bilinear_upsample(&x, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn upsample_two_by_two_hand_values() {
        // Source coordinate per output index for n = 2, s = 2:
        // (o + 0.5) / 2 - 0.5 = -0.25, 0.25, 0.75, 1.25 -> clamped 0, 0.25, 0.75, 1.
        let x = t64([1, 1, 2, 2], vec![0.0, 1.0, 2.0, 3.0]);
        let up = bilinear_upsample(&x, 2).unwrap();
        let expected = [
            [0.0, 0.25, 0.75, 1.0],
            [0.5, 0.75, 1.25, 1.5],
            [1.5, 1.75, 2.25, 2.5],
            [2.0, 2.25, 2.75, 3.0],
        ];
        for (y, row) in expected.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                assert!((up.at(0, 0, y, x) - v).abs() < 1e-12, "({y},{x})");
            }
        }
    }

    #[test]
    fn upsample_backward_is_adjoint() {
        let x = Tensor::<f64>::from_fn([1, 2, 3, 5], |[_, c, y, x]| ((c * 13 + y * 5 + x) % 7) as f64 - 3.0);
        let g = Tensor::<f64>::from_fn([1, 2, 12, 20], |[_, c, y, x]| ((c + 3 * y + 7 * x) % 11) as f64 * 0.1);
        let up = bilinear_upsample(&x, 4).unwrap();
        let back = bilinear_upsample_backward(x.shape(), 4, &g).unwrap();
        let lhs: f64 = up.data().iter().zip(g.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(back.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn huber_examples() {
        let one = |v: f64| t64([1, 1, 1, 1], vec![v]);
        assert_eq!(huber(&one(0.5), &one(0.0), 1.0).unwrap(), 0.125);
        assert_eq!(huber(&one(2.0), &one(0.0), 1.0).unwrap(), 1.5);
        assert_eq!(huber(&one(-2.0), &one(0.0), 1.0).unwrap(), 1.5);
        let p = Tensor::<f64>::from_fn([1, 2, 3, 3], |[_, c, y, x]| (c + y + x) as f64);
        assert_eq!(huber(&p, &p, 1.0).unwrap(), 0.0);
        assert!(huber(&p, &one(0.0), 1.0).is_err());
    }

    #[test]
    fn huber_gradient_clips_at_delta() {
        let p = t64([1, 1, 1, 4], vec![0.3, -0.2, 3.0, -5.0]);
        let t = Tensor::zeros([1, 1, 1, 4]);
        let g = huber_backward(&p, &t, 1.0, 1.0).unwrap();
        assert_eq!(g.data(), &[0.3 / 4.0, -0.2 / 4.0, 0.25, -0.25]);
    }
}
