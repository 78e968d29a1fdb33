//! Fit a single 35x32x32 patch at scale 2 with the default hyperparameters.
//!
//! cargo run --release --example overfit_patch -- [epochs]

use ddsrnet::data::{degrade, SyntheticScene};
use ddsrnet::model::ModelConfig;
use ddsrnet::trainer::{train_with, Sample, TrainConfig};

fn main() -> ddsrnet::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let hr = SyntheticScene::new(35, 32, 32, 7).generate();
    let sample = vec![Sample::from_cubes(&degrade(&hr, 2)?, &hr)];
    let config = TrainConfig {
        max_epochs: epochs,
        patience: 200.min(epochs.saturating_sub(1)),
        model: ModelConfig::with_scale(2),
        ..TrainConfig::default()
    };
    let outcome = train_with(&config, &sample, &sample, |e| {
        if e.epoch % 100 == 0 || e.epoch == 1 {
            println!("{e}");
        }
    })?;
    println!("lowest loss {:.3e} at epoch {}", outcome.log.best_val, outcome.log.best_epoch);
    Ok(())
}
