//! Train and evaluate the five single-component removals and the full model
//! under one seed.
//!
//! cargo run --release --example ablation_study -- [epochs]

use ddsrnet::data::{DatasetSpec, PreparedDataset, SyntheticScene};
use ddsrnet::trainer::{run_ablation, TrainConfig};

fn main() -> ddsrnet::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(40);
    let raw = SyntheticScene::new(50, 32, 736, 11).generate();
    let data = PreparedDataset::prepare(&raw, &DatasetSpec::new(32, 2))?;
    let config = TrainConfig { max_epochs: epochs, patience: epochs - 1, ..TrainConfig::default() };
    let table = run_ablation(&config, &data, |variant, e| {
        if e.epoch == epochs {
            println!("{:<30} final train loss {:.3e}", variant.label(), e.train.total);
        }
    })?;
    print!("{}", table.to_text());
    Ok(())
}
