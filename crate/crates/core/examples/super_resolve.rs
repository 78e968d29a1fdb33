//! Super-resolve a whole 45-band cube with a briefly trained model: the
//! bands are padded to 70, processed as two groups and trimmed back.

use ddsrnet::data::{degrade, SyntheticScene};
use ddsrnet::metrics::MetricReport;
use ddsrnet::model::{ModelConfig, GROUP_SIZE};
use ddsrnet::trainer::{bicubic_baseline, super_resolve, train, Sample, TrainConfig};

fn main() -> ddsrnet::Result<()> {
    let scale = 2;
    let hr = SyntheticScene::new(GROUP_SIZE, 32, 32 * 6, 5).generate();
    let samples: Vec<Sample> = (0..6)
        .map(|k| {
            let patch = hr.crop(0, 32 * k, 32, 32)?;
            Ok(Sample::from_cubes(&degrade(&patch, scale)?, &patch))
        })
        .collect::<ddsrnet::Result<_>>()?;
    let config = TrainConfig { max_epochs: 400, patience: 100, model: ModelConfig::with_scale(scale), ..TrainConfig::default() };
    let model = train(&config, &samples[1..], &samples[..1])?.params;

    let scene = SyntheticScene::new(45, 48, 48, 6).generate();
    let lr = degrade(&scene, scale)?;
    let sr = super_resolve(&model, &lr)?;
    println!("input {}x{}x{} -> output {}x{}x{}", lr.bands(), lr.height(), lr.width(), sr.bands(), sr.height(), sr.width());
    println!("model:   {}", MetricReport::compute(&sr, &scene)?.kv_line());
    println!("bicubic: {}", MetricReport::compute(&bicubic_baseline(&lr, scale)?, &scene)?.kv_line());
    Ok(())
}
