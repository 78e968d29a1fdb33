//! Finite-difference check of the full network and hybrid loss in f64.

use ddsrnet::gradcheck::{check_model, GradCheckOptions};
use ddsrnet::loss::LossWeights;
use ddsrnet::model::{init_params, ModelConfig};
use ddsrnet::tensor::{Shape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ddsrnet::Result<()> {
    let config = ModelConfig::with_scale(2);
    let params = init_params::<f64>(&config, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lr = Tensor::from_fn(Shape::new(1, config.channels, 8, 8), |_| rng.gen_range(0.0..1.0));
    let hr = Tensor::from_fn(Shape::new(1, config.channels, 16, 16), |_| rng.gen_range(0.0..1.0));
    let opts = GradCheckOptions::default();
    let report = check_model(&params, &lr, &hr, &LossWeights::default(), 1.0, &opts)?;
    println!(
        "{} coordinates checked ({} skipped at ReLU kinks), max relative error {:.3e} at index {}",
        report.checked, report.skipped_kinks, report.max_rel_error, report.worst_index
    );
    println!("{}", if report.passes(1e-4) { "PASS" } else { "FAIL" });
    Ok(())
}
