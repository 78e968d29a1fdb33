//! The `ddsr` command line.
//!
//! Exit codes: 0 success, 2 I/O, format or configuration problems, 3 shape
//! or specification violations, 4 numeric divergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::KeyValues;
use crate::data::{load_cube, save_cube, DatasetSpec, PreparedDataset};
use crate::error::{Error, Result};
use crate::model::{init_params, DdsrParams, ModelConfig, SUPPORTED_SCALES};
use crate::trainer::{evaluate, run_ablation, super_resolve, train_dataset, Ablation, TrainConfig};

/// Environment variable overriding the `seed` key.
pub const SEED_ENV: &str = "DDSR_SEED";

#[derive(Debug, Parser)]
#[command(name = "ddsr", version, about = "Dual-domain hyperspectral super-resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalise, pad and split a cube into a dataset directory.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        /// Dataset manifest (key=value).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Override a manifest key, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Train a model on a prepared dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// One of no-spatial, no-wavelet, no-shared, no-grouping, no-hybrid.
        #[arg(long)]
        ablation: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print only every n-th epoch line.
        #[arg(long, default_value_t = 1)]
        log_every: usize,
    },
    /// Evaluate a checkpoint on the test split, with interpolation baselines.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Super-resolve a normalised low-resolution cube.
    Sr {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scale: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate every ablation variant.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Parameter counts, checkpoint contents or a dataset audit.
    Info {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Config(_)) {
                let _ = writeln!(err, "run `ddsr --help` for usage");
            }
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// File, then `DDSR_SEED`, then `--set` overrides.
fn load_settings(path: Option<&Path>, overrides: &[String]) -> Result<KeyValues> {
    let mut kv = match path {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::new(),
    };
    if let Ok(seed) = std::env::var(SEED_ENV) {
        seed.trim()
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={seed:?} is not an unsigned integer")))?;
        kv.set("seed", seed.trim());
    }
    for o in overrides {
        kv.apply_override(o)?;
    }
    Ok(kv)
}

fn load_model(checkpoint: &Path, scale: usize) -> Result<DdsrParams<f32>> {
    let store = load_checkpoint(checkpoint)?;
    let config = ModelConfig::infer(&store, scale)?;
    DdsrParams::from_store(config, store)
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Prepare { input, config, out: dir, overrides } => {
            let raw = load_cube(&input)?;
            let mut kv = load_settings(config.as_deref(), &overrides)?;
            if kv.raw("name").is_none() {
                kv.set("name", &raw.name);
            }
            let spec = DatasetSpec::from_key_values(&kv)?;
            let data = PreparedDataset::prepare(&raw, &spec)?;
            data.save(&dir)?;
            write!(out, "{}", data.audit_text())?;
        }
        Command::Train { data, config, ablation, out: dir, overrides, log_every } => {
            let dataset = PreparedDataset::load(&data)?;
            let kv = load_settings(config.as_deref(), &overrides)?;
            let mut cfg = TrainConfig::from_key_values(&kv)?;
            if let Some(flag) = ablation {
                cfg = Ablation::parse(&flag)?.apply(&cfg);
            }
            let cfg = cfg.for_dataset(&dataset);
            cfg.validate()?;
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("config.resolved"), cfg.to_key_values().to_text())?;
            let every = log_every.max(1);
            let outcome = train_dataset(&cfg, &dataset, |e| {
                if e.epoch % every == 0 || e.epoch == 1 {
                    let _ = writeln!(out, "{e}");
                }
            });
            let outcome = match outcome {
                Ok(o) => o,
                Err(e) => {
                    fs::write(dir.join("train.log"), format!("ERROR {e}\n"))?;
                    return Err(e);
                }
            };
            save_checkpoint(&outcome.params, dir.join("best.ckpt"))?;
            fs::write(dir.join("train.log"), outcome.log.to_text())?;
            writeln!(
                out,
                "best epoch {} of {} (val {:.6e}); checkpoint {}",
                outcome.log.best_epoch,
                outcome.log.epochs.len(),
                outcome.log.best_val,
                dir.join("best.ckpt").display()
            )?;
        }
        Command::Eval { checkpoint, data } => {
            let dataset = PreparedDataset::load(&data)?;
            let params = load_model(&checkpoint, dataset.spec.scale)?;
            write!(out, "{}", evaluate(&params, &dataset)?.to_text())?;
        }
        Command::Sr { checkpoint, input, scale, out: path } => {
            let params = load_model(&checkpoint, scale)?;
            let lr = load_cube(&input)?;
            let sr = super_resolve(&params, &lr)?;
            save_cube(&sr, &path)?;
            writeln!(
                out,
                "{}x{}x{} -> {}x{}x{} written to {}",
                lr.original_bands(),
                lr.height(),
                lr.width(),
                sr.bands(),
                sr.height(),
                sr.width(),
                path.display()
            )?;
        }
        Command::Ablate { data, config, out: dir, overrides } => {
            let dataset = PreparedDataset::load(&data)?;
            let cfg = TrainConfig::from_key_values(&load_settings(config.as_deref(), &overrides)?)?;
            let table = run_ablation(&cfg, &dataset, |_, _| {})?;
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("ablation.txt"), table.to_text())?;
            write!(out, "{}", table.to_text())?;
        }
        Command::Info { checkpoint, data } => {
            if checkpoint.is_none() && data.is_none() {
                for scale in SUPPORTED_SCALES {
                    let n = init_params::<f32>(&ModelConfig::with_scale(scale), 0)?.param_count();
                    writeln!(out, "default model, scale {scale}: {n} parameters")?;
                }
            }
            if let Some(path) = checkpoint {
                let store = load_checkpoint(&path)?;
                for p in store.iter() {
                    writeln!(out, "{} {}", p.name, p.value.shape())?;
                }
                writeln!(out, "total {} parameters", store.numel())?;
            }
            if let Some(dir) = data {
                write!(out, "{}", PreparedDataset::load(&dir)?.audit_text())?;
            }
        }
    }
    Ok(())
}
