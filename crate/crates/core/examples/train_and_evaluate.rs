//! Prepare a synthetic scene, train briefly, evaluate against interpolation
//! baselines, and save the checkpoint.
//!
//! cargo run --release --example train_and_evaluate -- [epochs]

use ddsrnet::checkpoint::save_checkpoint;
use ddsrnet::data::{DatasetSpec, PreparedDataset, SyntheticScene};
use ddsrnet::trainer::{evaluate, train_dataset, TrainConfig};

fn main() -> ddsrnet::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let raw = SyntheticScene::new(50, 32, 736, 11).generate();
    let mut spec = DatasetSpec::new(32, 2);
    spec.name = "synthetic".into();
    let data = PreparedDataset::prepare(&raw, &spec)?;
    print!("{}", data.audit_text());

    let config = TrainConfig { max_epochs: epochs, patience: epochs - 1, ..TrainConfig::default() };
    let outcome = train_dataset(&config, &data, |e| {
        if e.epoch % 10 == 0 || e.epoch == 1 {
            println!("{e}");
        }
    })?;
    println!("best epoch {} in {:.1}s", outcome.log.best_epoch, outcome.log.wall_seconds);
    print!("{}", evaluate(&outcome.params, &data)?.to_text());

    let dir = std::env::temp_dir().join("ddsr-example");
    data.save(&dir)?;
    save_checkpoint(&outcome.params, dir.join("best.ckpt"))?;
    println!("dataset and checkpoint written to {}", dir.display());
    Ok(())
}
