//! Quality metrics of bicubic and bilinear upsampling on a synthetic scene.

use ddsrnet::data::{degrade, SyntheticScene};
use ddsrnet::metrics::{sam_detailed, MetricReport};
use ddsrnet::trainer::{bicubic_baseline, bilinear_baseline};

fn main() -> ddsrnet::Result<()> {
    let hr = SyntheticScene::new(31, 64, 64, 2).generate();
    for scale in [2, 4] {
        let lr = degrade(&hr, scale)?;
        let bicubic = MetricReport::compute(&bicubic_baseline(&lr, scale)?, &hr)?;
        let bilinear = MetricReport::compute(&bilinear_baseline(&lr, scale)?, &hr)?;
        println!("x{scale} bicubic:  {}", bicubic.kv_line());
        println!("x{scale} bilinear: {}", bilinear.kv_line());
    }
    let same = MetricReport::compute(&hr, &hr)?;
    print!("identical input:\n{}", same.to_text());
    let angle = sam_detailed(&hr, &hr)?;
    println!("skipped pixels in SAM: {}", angle.skipped);
    Ok(())
}
