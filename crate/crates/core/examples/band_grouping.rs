//! Band padding and grouping for common sensor band counts.

use ddsrnet::data::{group_bands, pad_bands, pad_target, ungroup, HyperCube};
use ddsrnet::model::GROUP_SIZE;

fn main() -> ddsrnet::Result<()> {
    for (sensor, bands) in [("Pavia Centre", 102), ("Pavia University", 103), ("Chikusei", 128)] {
        let cube = HyperCube::from_fn(sensor, bands, 4, 4, |b, _, _| b as f32);
        let target = pad_target(bands, GROUP_SIZE);
        let padded = pad_bands(&cube, target, GROUP_SIZE)?;
        let groups = group_bands(&padded, GROUP_SIZE)?;
        let restored = ungroup(&groups, bands)?;
        println!(
            "{sensor:<17} {bands} bands -> {target} ({} duplicated), {} groups, round trip exact: {}",
            target - bands,
            groups.len(),
            restored.values() == cube.values()
        );
    }
    Ok(())
}
