//! Haar analysis/synthesis on a random tensor: reconstruction error and
//! energy preservation.

use ddsrnet::tensor::{Shape, Tensor};
use ddsrnet::wavelet::{dwt2_haar, idwt2_haar, Subband};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ddsrnet::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Tensor::<f64>::from_fn(Shape::new(1, 3, 16, 24), |_| rng.gen_range(-1.0..1.0));
    let pyramid = dwt2_haar(&x)?;
    for band in Subband::ALL {
        println!("{:>2}: shape {}  energy {:.4}", band.name(), pyramid.band(band).shape(), pyramid.band(band).sum_sq());
    }
    let back = idwt2_haar(&pyramid)?;
    println!("max |x - idwt(dwt(x))| = {:.3e}", back.max_abs_diff(&x));
    println!("input energy {:.6}, subband energy {:.6}", x.sum_sq(), pyramid.energy());
    Ok(())
}
