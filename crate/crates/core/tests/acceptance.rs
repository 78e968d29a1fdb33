//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on failure.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use ddsrnet::data::{degrade, group_bands, pad_bands, pad_target, save_cube, DatasetSpec, HyperCube, PreparedDataset, SyntheticScene};
use ddsrnet::gradcheck::{check_model, GradCheckOptions};
use ddsrnet::loss::LossWeights;
use ddsrnet::metrics::{cc, mpsnr, mssim, rmse, sam};
use ddsrnet::model::{init_params, ModelConfig, GROUP_SIZE};
use ddsrnet::tensor::{Real, Shape, Tensor};
use ddsrnet::trainer::{evaluate, run_ablation, train_with, Ablation, AblationTable, Sample, TrainConfig};
use ddsrnet::wavelet::{dwt2_haar, idwt2_haar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn wavelet_errors<T: Real>(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (mut worst_rec, mut worst_energy) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let shape = Shape::new(rng.gen_range(1..3), rng.gen_range(1..5), 2 * rng.gen_range(1..17), 2 * rng.gen_range(1..17));
        let x = Tensor::<T>::from_fn(shape, |_| T::from_f64_lossy(rng.gen_range(-1.0..1.0)));
        let p = dwt2_haar(&x).unwrap();
        let back = idwt2_haar(&p).unwrap();
        let scale = x.data().iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
        worst_rec = worst_rec.max(back.max_abs_diff(&x).as_f64() / scale);
        let (e_in, e_out) = (x.sum_sq().as_f64(), p.energy().as_f64());
        worst_energy = worst_energy.max((e_in - e_out).abs() / e_in);
    }
    (worst_rec, worst_energy)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (r32, e32) = wavelet_errors::<f32>(&mut rng);
    let (r64, e64) = wavelet_errors::<f64>(&mut rng);
    check(
        r32 < 1e-5 && r64 < 1e-10 && e32 < 1e-5 && e64 < 1e-5,
        format!("rel err f32 {r32:.2e}, f64 {r64:.2e}; energy f32 {e32:.2e}, f64 {e64:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let config = ModelConfig::with_scale(2);
    let params = init_params::<f64>(&config, 2).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let lr = Tensor::from_fn(Shape::new(1, GROUP_SIZE, 8, 8), |_| rng.gen_range(0.0..1.0));
    let hr = Tensor::from_fn(Shape::new(1, GROUP_SIZE, 16, 16), |_| rng.gen_range(0.0..1.0));
    let opts = GradCheckOptions { samples: Some(200), ..GradCheckOptions::default() };
    let r = check_model(&params, &lr, &hr, &LossWeights::default(), 1.0, &opts).map_err(|e| e.to_string())?;
    check(
        r.checked == 200 && r.max_rel_error < 1e-4,
        format!("max rel err {:.2e} over {} coordinates ({} kink coordinates skipped)", r.max_rel_error, r.checked, r.skipped_kinks),
    )
}

fn criterion_3() -> Outcome {
    let n = init_params::<f32>(&ModelConfig::with_scale(4), 0).map_err(|e| e.to_string())?.param_count();
    check(n <= 100_000, format!("{n} parameters at scale 4"))
}

fn criterion_4() -> Outcome {
    let raw = SyntheticScene::new(45, 32, 128, 4).generate();
    let data = PreparedDataset::prepare(&raw, &DatasetSpec::new(32, 2)).map_err(|e| e.to_string())?;
    let mut params = init_params::<f32>(&ModelConfig::with_scale(2), 4).map_err(|e| e.to_string())?;
    params.zero_all();
    let e = evaluate(&params, &data).map_err(|e| e.to_string())?;
    let diff = e.model.max_abs_diff(&e.bilinear);
    check(diff <= 1e-6, format!("max metric difference to bilinear {diff:.2e} (mpsnr {:.4})", e.model.mpsnr))
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let (p, r) = metric_pair(1000 + seed);
        let pairs = [
            (mpsnr(&p, &r, 1.0), psnr_oracle(&p, &r)),
            (mssim(&p, &r, 1.0), ssim_oracle(&p, &r)),
            (sam(&p, &r), sam_oracle(&p, &r)),
            (rmse(&p, &r), rmse_oracle(&p, &r)),
            (cc(&p, &r), cc_oracle(&p, &r)),
        ];
        for (got, want) in pairs {
            worst = worst.max((got.map_err(|e| e.to_string())? - want).abs());
        }
    }
    let (p, r) = metric_pair(7);
    let base = sam(&p, &r).unwrap();
    let scaled_ok = [0.5f32, 2.0, 4.0].iter().all(|&k| {
        let q = HyperCube::from_fn("k", 3, 16, 16, |b, y, x| k * p.at(b, y, x));
        sam(&q, &r).unwrap() == base
    });
    let a = HyperCube::new("a", 2, 1, 1, vec![1.0, 0.0]).unwrap();
    let b = HyperCube::new("b", 2, 1, 1, vec![0.0, 1.0]).unwrap();
    let right = sam(&a, &b).unwrap();
    check(
        worst < 1e-6 && scaled_ok && right == 90.0,
        format!("max oracle deviation {worst:.2e}; SAM scale invariant: {scaled_ok}; orthogonal angle {right}"),
    )
}

fn criterion_6() -> Outcome {
    let hr = SyntheticScene::new(GROUP_SIZE, 32, 32, 7).generate();
    let sample = vec![Sample::from_cubes(&degrade(&hr, 2).unwrap(), &hr)];
    let config = TrainConfig { max_epochs: 2000, model: ModelConfig::with_scale(2), ..TrainConfig::default() };
    let mut reached = None;
    let out = train_with(&config, &sample, &sample, |e| {
        if reached.is_none() && e.val < 1e-4 {
            reached = Some(e.epoch);
        }
    })
    .map_err(|e| e.to_string())?;
    let lowest = format!("lowest {:.2e} at epoch {}", out.log.best_val, out.log.best_epoch);
    match reached {
        Some(epoch) => Ok(format!("loss below 1e-4 from epoch {epoch}; {lowest}")),
        None => Err(format!("loss never below 1e-4 in 2000 epochs; {lowest}")),
    }
}

/// The criterion 7/8 setting: a 32 x 736 strip of 50 bands gives 23 patches
/// of 32 x 32 (20 train, 2 validation, 1 test) and two band groups after
/// padding to 70.
fn smoke_dataset() -> PreparedDataset {
    let raw = SyntheticScene::new(50, 32, 736, 11).generate();
    PreparedDataset::prepare(&raw, &DatasetSpec::new(32, 2)).expect("valid smoke dataset")
}

fn smoke_config() -> TrainConfig {
    TrainConfig { max_epochs: 500, patience: 200, seed: 0, ..TrainConfig::default() }
}

fn criterion_7(table: &AblationTable) -> Outcome {
    let full = &table.row(Ablation::Full).unwrap().evaluation;
    let gain = full.model.mpsnr - full.bicubic.mpsnr;
    check(
        gain >= 0.3,
        format!("model {:.3} dB vs bicubic {:.3} dB (gain {gain:+.3} dB)", full.model.mpsnr, full.bicubic.mpsnr),
    )
}

fn criterion_8(table: &AblationTable) -> Outcome {
    let full = table.row(Ablation::Full).unwrap().evaluation.model.mpsnr;
    let mut parts = Vec::new();
    let mut soft_misses = Vec::new();
    for row in table.rows.iter().filter(|r| r.variant != Ablation::Full) {
        let gap = full - row.evaluation.model.mpsnr;
        parts.push(format!("{} {gap:+.3}", row.variant.flag()));
        if gap < -0.05 {
            soft_misses.push(row.variant.flag());
        }
    }
    let spatial_gap = full - table.row(Ablation::NoSpatialNet).unwrap().evaluation.model.mpsnr;
    let wavelet_smaller = table.row(Ablation::NoWaveletNet).unwrap().param_count < table.row(Ablation::Full).unwrap().param_count;
    let soft = if soft_misses.is_empty() { "all within slack".to_string() } else { format!("below slack: {}", soft_misses.join(", ")) };
    check(
        spatial_gap > 0.0 && wavelet_smaller,
        format!("full minus variant (dB): {}; {soft}", parts.join(", ")),
    )
}

fn run_pipeline(bin: &str, root: &Path) -> Result<(Vec<u8>, Vec<u8>, String), String> {
    let run = |args: &[&str]| -> Result<String, String> {
        let o = Command::new(bin).args(args).env_remove("DDSR_SEED").output().map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
        Ok(String::from_utf8_lossy(&o.stdout).into_owned())
    };
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let (input, data, out) = (root.join("scene.hsr"), root.join("data"), root.join("run"));
    run(&["prepare", "--input", &s(&input), "--out", &s(&data), "--set", "patch_size=16", "--set", "scale=2", "--set", "seed=3"])?;
    run(&["train", "--data", &s(&data), "--out", &s(&out), "--set", "max_epochs=50", "--set", "patience=20", "--set", "seed=3"])?;
    let eval = run(&["eval", "--checkpoint", &s(&out.join("best.ckpt")), "--data", &s(&data)])?;
    let read = |p: &Path| fs::read(p).map_err(|e| e.to_string());
    Ok((read(&out.join("best.ckpt"))?, read(&out.join("train.log"))?, eval))
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ddsr");
    let scene = SyntheticScene::new(40, 32, 80, 9).generate();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut results = Vec::new();
    for d in &dirs {
        save_cube(&scene, d.path().join("scene.hsr")).unwrap();
        results.push(run_pipeline(bin, d.path())?);
    }
    let (a, b) = (&results[0], &results[1]);
    let metrics = |t: &str| t.lines().filter(|l| l.starts_with("METRICS") || l.starts_with("BASELINE")).collect::<Vec<_>>().join("\n");
    let same = (a.0 == b.0, a.1 == b.1, metrics(&a.2) == metrics(&b.2));
    check(
        same == (true, true, true) && !metrics(&a.2).is_empty(),
        format!("identical checkpoint {}, log {}, metric lines {}", same.0, same.1, same.2),
    )
}

fn criterion_10() -> Outcome {
    let cube = |bands: usize| HyperCube::from_fn("c", bands, 2, 2, |b, _, _| b as f32);
    let mut facts = Vec::new();
    let mut ok = true;
    for (bands, target, dups) in [(102, 105, 3), (103, 105, 2), (128, 140, 12)] {
        let t = pad_target(bands, GROUP_SIZE);
        let padded = pad_bands(&cube(bands), t, GROUP_SIZE).unwrap();
        let copies = (bands..t).filter(|&b| padded.band(b) == cube(bands).band(bands - 1)).count();
        ok &= t == target && copies == dups;
        facts.push(format!("{bands}->{t} ({copies} dups)"));
    }
    for (bands, groups) in [(105, 3), (140, 4)] {
        let n = group_bands(&cube(bands), GROUP_SIZE).unwrap().len();
        ok &= n == groups;
        facts.push(format!("{bands}->{n} groups"));
    }
    check(ok, facts.join(", "))
}

fn report(n: usize, name: &str, start: Instant, outcome: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (status, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("criterion {n:>2} [{status}] {name}: {detail} ({secs:.1}s)");
    ok
}

fn main() {
    let mut all = true;
    let simple: [(usize, &str, fn() -> Outcome); 6] = [
        (1, "wavelet identity", criterion_1),
        (2, "gradient fidelity", criterion_2),
        (3, "parameter budget", criterion_3),
        (4, "zero-residual equivalence", criterion_4),
        (5, "metric oracles", criterion_5),
        (6, "overfit sanity", criterion_6),
    ];
    for (n, name, f) in simple {
        let t = Instant::now();
        all &= report(n, name, t, f());
    }

    let t = Instant::now();
    let data = smoke_dataset();
    let table = run_ablation(&smoke_config(), &data, |_, _| {});
    match table {
        Ok(table) => {
            all &= report(7, "beats bicubic", t, criterion_7(&table));
            all &= report(8, "ablation direction", t, criterion_8(&table));
            print!("{}", table.to_text());
        }
        Err(e) => {
            all &= report(7, "beats bicubic", t, Err(e.to_string()));
            all &= report(8, "ablation direction", t, Err(e.to_string()));
        }
    }

    let t = Instant::now();
    all &= report(9, "pipeline determinism", t, criterion_9());
    let t = Instant::now();
    all &= report(10, "protocol conformance", t, criterion_10());

    if !all {
        std::process::exit(1);
    }
}
