//! Parameter counts of the default network and of each ablated variant.

use ddsrnet::model::{init_params, ModelConfig};

fn main() -> ddsrnet::Result<()> {
    let full = ModelConfig::with_scale(4);
    let variants = [
        ("full", full),
        ("without spatial net", ModelConfig { use_spatial_net: false, ..full }),
        ("without wavelet net", ModelConfig { use_wavelet_net: false, ..full }),
        ("unshared high branch", ModelConfig { share_high_branch: false, ..full }),
    ];
    for (name, config) in variants {
        let params = init_params::<f32>(&config, 0)?;
        println!("{name:<22} {:>7}", params.param_count());
    }
    let params = init_params::<f32>(&full, 0)?;
    for p in params.store().iter() {
        println!("  {:<28} {}", p.name, p.value.shape());
    }
    Ok(())
}
