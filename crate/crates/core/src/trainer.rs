//! Seeded mini-batch training with validation early stopping, evaluation
//! against interpolation baselines, and the ablation study.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::Graph;
use crate::config::KeyValues;
use crate::data::{bicubic_upsample, group_bands, pad_bands, pad_target, ungroup, HyperCube, PreparedDataset, Split};
use crate::error::{shape_err, Error, Result};
use crate::loss::{hybrid_loss_graph, LossBreakdown, LossWeights, DEFAULT_DELTA};
use crate::metrics::MetricReport;
use crate::model::{init_params, DdsrParams, ModelConfig, GROUP_SIZE};
use crate::optim::{AdamConfig, AdamState};
use crate::tensor::{ops, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Validation loss must drop by at least this much to count as better.
    pub min_improvement: f64,
    pub seed: u64,
    pub delta: f64,
    pub weights: LossWeights,
    pub model: ModelConfig,
    /// Train on 35-band groups; otherwise on the unpadded cube as a whole.
    pub band_grouping: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_size: 4,
            max_epochs: 6000,
            patience: 200,
            min_improvement: 1e-7,
            seed: 0,
            delta: DEFAULT_DELTA,
            weights: LossWeights::default(),
            model: ModelConfig::default(),
            band_grouping: true,
        }
    }
}

pub const TRAIN_KEYS: [&str; 18] = [
    "lr",
    "batch",
    "max_epochs",
    "patience",
    "min_improvement",
    "seed",
    "delta",
    "lambda_rec",
    "lambda_spatial",
    "lambda_low",
    "lambda_high",
    "channels",
    "hidden",
    "scale",
    "use_spatial_net",
    "use_wavelet_net",
    "share_high_branch",
    "band_grouping",
];

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return bad(format!(
                "patience ({}) must be below max_epochs ({}), which must be positive",
                self.patience, self.max_epochs
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("Huber delta {} must be positive", self.delta));
        }
        if self.min_improvement.is_nan() || self.min_improvement < 0.0 {
            return bad("min_improvement must be non-negative".into());
        }
        self.weights.validate()?;
        self.model.validate()
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&TRAIN_KEYS)?;
        let d = Self::default();
        let m = d.model;
        let config = Self {
            lr: kv.get_or("lr", d.lr)?,
            batch_size: kv.get_or("batch", d.batch_size)?,
            max_epochs: kv.get_or("max_epochs", d.max_epochs)?,
            patience: kv.get_or("patience", d.patience)?,
            min_improvement: kv.get_or("min_improvement", d.min_improvement)?,
            seed: kv.get_or("seed", d.seed)?,
            delta: kv.get_or("delta", d.delta)?,
            weights: LossWeights {
                rec: kv.get_or("lambda_rec", d.weights.rec)?,
                spatial: kv.get_or("lambda_spatial", d.weights.spatial)?,
                low: kv.get_or("lambda_low", d.weights.low)?,
                high: kv.get_or("lambda_high", d.weights.high)?,
            },
            model: ModelConfig {
                channels: kv.get_or("channels", m.channels)?,
                hidden: kv.get_or("hidden", m.hidden)?,
                scale: kv.get_or("scale", m.scale)?,
                use_spatial_net: kv.get_or("use_spatial_net", m.use_spatial_net)?,
                use_wavelet_net: kv.get_or("use_wavelet_net", m.use_wavelet_net)?,
                share_high_branch: kv.get_or("share_high_branch", m.share_high_branch)?,
            },
            band_grouping: kv.get_or("band_grouping", d.band_grouping)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("lr", self.lr);
        kv.set("batch", self.batch_size);
        kv.set("max_epochs", self.max_epochs);
        kv.set("patience", self.patience);
        kv.set("min_improvement", self.min_improvement);
        kv.set("seed", self.seed);
        kv.set("delta", self.delta);
        kv.set("lambda_rec", self.weights.rec);
        kv.set("lambda_spatial", self.weights.spatial);
        kv.set("lambda_low", self.weights.low);
        kv.set("lambda_high", self.weights.high);
        kv.set("channels", self.model.channels);
        kv.set("hidden", self.model.hidden);
        kv.set("scale", self.model.scale);
        kv.set("use_spatial_net", self.model.use_spatial_net);
        kv.set("use_wavelet_net", self.model.use_wavelet_net);
        kv.set("share_high_branch", self.model.share_high_branch);
        kv.set("band_grouping", self.band_grouping);
        kv
    }

    /// Match the model to a prepared dataset: scale from the dataset, and
    /// channels from the grouping protocol.
    pub fn for_dataset(&self, data: &PreparedDataset) -> Self {
        let mut out = self.clone();
        out.model.scale = data.spec.scale;
        out.model.channels = if self.band_grouping { data.spec.group_size } else { data.cube.original_bands() };
        out
    }
}

/// Single-component removals of the ablation table, in its row order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ablation {
    NoSpatialNet,
    NoWaveletNet,
    NoSharedBranch,
    NoBandGrouping,
    NoHybridLoss,
    Full,
}

impl Ablation {
    pub const ALL: [Ablation; 6] = [
        Ablation::NoSpatialNet,
        Ablation::NoWaveletNet,
        Ablation::NoSharedBranch,
        Ablation::NoBandGrouping,
        Ablation::NoHybridLoss,
        Ablation::Full,
    ];

    pub fn flag(self) -> &'static str {
        match self {
            Ablation::NoSpatialNet => "no-spatial",
            Ablation::NoWaveletNet => "no-wavelet",
            Ablation::NoSharedBranch => "no-shared",
            Ablation::NoBandGrouping => "no-grouping",
            Ablation::NoHybridLoss => "no-hybrid",
            Ablation::Full => "full",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Ablation::NoSpatialNet => "Without Spatial-Net",
            Ablation::NoWaveletNet => "Without Wavelet-Net",
            Ablation::NoSharedBranch => "Without Shared Wavelet Branch",
            Ablation::NoBandGrouping => "Without Band Grouping",
            Ablation::NoHybridLoss => "Without Hybrid Loss",
            Ablation::Full => "DDSRNet",
        }
    }

    pub fn parse(flag: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.flag() == flag).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|a| a.flag()).collect();
            Error::Config(format!("unknown ablation '{flag}', expected one of {}", known.join(", ")))
        })
    }

    pub fn apply(self, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        match self {
            Ablation::NoSpatialNet => c.model.use_spatial_net = false,
            Ablation::NoWaveletNet => c.model.use_wavelet_net = false,
            Ablation::NoSharedBranch => c.model.share_high_branch = false,
            Ablation::NoBandGrouping => c.band_grouping = false,
            Ablation::NoHybridLoss => c.weights = LossWeights::reconstruction_only(),
            Ablation::Full => {}
        }
        c
    }
}

/// One `(lr, hr)` training pair, each shaped `(1, C, h, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub lr: Tensor<f32>,
    pub hr: Tensor<f32>,
}

impl Sample {
    pub fn from_cubes(lr: &HyperCube, hr: &HyperCube) -> Self {
        Self { lr: lr.to_tensor(), hr: hr.to_tensor() }
    }
}

/// Every (group, patch) pair of a split. Without grouping each patch is one
/// sample over its original bands.
pub fn samples(data: &PreparedDataset, split: Split, band_grouping: bool) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for patch in data.patches(split)? {
        if band_grouping {
            let lr = group_bands(&patch.lr, data.spec.group_size)?;
            let hr = group_bands(&patch.hr, data.spec.group_size)?;
            out.extend(lr.iter().zip(&hr).map(|(l, h)| Sample::from_cubes(l, h)));
        } else {
            out.push(Sample::from_cubes(&patch.lr.strip_padding(), &patch.hr.strip_padding()));
        }
    }
    Ok(out)
}

/// Tracks the best validation loss and when to stop.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    min_improvement: f64,
    best: f64,
    best_epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_improvement: f64) -> Self {
        Self { patience, min_improvement, best: f64::INFINITY, best_epoch: 0 }
    }

    /// Record the validation loss of `epoch`; true when it is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        let better = loss < self.best - self.min_improvement || (self.best.is_infinite() && loss.is_finite());
        if better {
            self.best = loss;
            self.best_epoch = epoch;
        }
        better
    }

    pub fn should_stop(&self, epoch: usize) -> bool {
        epoch - self.best_epoch >= self.patience
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub val: f64,
    pub best: bool,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.train;
        write!(
            f,
            "EPOCH {} train={:.8e} rec={:.8e} spatial={:.8e} low={:.8e} high={:.8e} val={:.8e} best={}",
            self.epoch, t.total, t.rec, t.spatial, t.low, t.high, self.val, self.best
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val: f64,
    pub stop: StopReason,
    /// Not written by `to_text`, which must be reproducible.
    pub wall_seconds: f64,
}

impl TrainLog {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            let _ = writeln!(out, "{e}");
        }
        let stop = match self.stop {
            StopReason::EarlyStop => "early_stop",
            StopReason::MaxEpochs => "max_epochs",
        };
        let _ = writeln!(out, "DONE epochs={} best_epoch={} best_val={:.8e} stop={stop}", self.epochs.len(), self.best_epoch, self.best_val);
        out
    }

    pub fn first_train_loss(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.train.total)
    }

    pub fn last_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train.total)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub params: DdsrParams<f32>,
    pub log: TrainLog,
}

fn check_samples(set: &[Sample], config: &ModelConfig, what: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} split is empty")));
    }
    for s in set {
        let (l, h) = (s.lr.shape(), s.hr.shape());
        if l.batch != 1 || l.channels != config.channels || h.channels != config.channels {
            return shape_err(format!(
                "{what} sample has {} channels, the model expects {}",
                l.channels, config.channels
            ));
        }
        if h.height != l.height * config.scale || h.width != l.width * config.scale {
            return shape_err(format!("{what} sample {l} -> {h} does not match scale {}", config.scale));
        }
    }
    Ok(())
}

fn stack(set: &[Sample], idx: &[usize]) -> Result<(Tensor<f32>, Tensor<f32>)> {
    let lr: Vec<&Tensor<f32>> = idx.iter().map(|&i| &set[i].lr).collect();
    let hr: Vec<&Tensor<f32>> = idx.iter().map(|&i| &set[i].hr).collect();
    Ok((Tensor::stack_batch(&lr)?, Tensor::stack_batch(&hr)?))
}

/// Mean hybrid loss over a set, in fixed batches.
pub fn mean_loss(params: &DdsrParams<f32>, set: &[Sample], config: &TrainConfig) -> Result<LossBreakdown> {
    let order: Vec<usize> = (0..set.len()).collect();
    let mut acc = LossBreakdown::default();
    for chunk in order.chunks(config.batch_size) {
        let (lr, hr) = stack(set, chunk)?;
        let mut g = Graph::new();
        let x = g.input(lr);
        let y = g.input(hr);
        let out = params.forward_graph(&mut g, x)?;
        let loss = hybrid_loss_graph(&mut g, &out, y, &config.weights, config.delta)?.breakdown(&g);
        acc = acc.add_scaled(&loss, chunk.len() as f64 / set.len() as f64);
    }
    Ok(acc)
}

pub fn train(config: &TrainConfig, train_set: &[Sample], val_set: &[Sample]) -> Result<TrainOutcome> {
    train_with(config, train_set, val_set, |_| {})
}

/// Train from a fresh seeded initialisation, calling `on_epoch` after each
/// epoch.
pub fn train_with(
    config: &TrainConfig,
    train_set: &[Sample],
    val_set: &[Sample],
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    let params = init_params::<f32>(&config.model, config.seed)?;
    train_from(config, params, train_set, val_set, on_epoch)
}

/// Train starting from the given parameters.
pub fn train_from(
    config: &TrainConfig,
    mut params: DdsrParams<f32>,
    train_set: &[Sample],
    val_set: &[Sample],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    check_samples(train_set, params.config(), "train")?;
    check_samples(val_set, params.config(), "validation")?;
    let start = Instant::now();
    let adam_config = AdamConfig { lr: config.lr, ..AdamConfig::default() };
    let mut adam = AdamState::new(adam_config, params.store());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut stopper = EarlyStopping::new(config.patience, config.min_improvement);
    let mut best_params = params.clone();
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss = LossBreakdown::default();
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let (lr, hr) = stack(train_set, chunk)?;
            let mut g = Graph::new();
            let x = g.input(lr);
            let y = g.input(hr);
            let out = params.forward_graph(&mut g, x)?;
            let vars = hybrid_loss_graph(&mut g, &out, y, &config.weights, config.delta)?;
            let loss = vars.breakdown(&g);
            if !loss.total.is_finite() {
                return Err(Error::Divergence { epoch, batch: b + 1, loss: loss.total });
            }
            params.store_mut().zero_grad();
            g.backward(vars.total, params.store_mut())?;
            adam.step(params.store_mut())?;
            train_loss = train_loss.add_scaled(&loss, chunk.len() as f64 / train_set.len() as f64);
        }
        let val = mean_loss(&params, val_set, config)?.total;
        if !val.is_finite() {
            return Err(Error::Divergence { epoch, batch: 0, loss: val });
        }
        let best = stopper.observe(epoch, val);
        if best {
            best_params = params.clone();
        }
        let record = EpochRecord { epoch, train: train_loss, val, best };
        on_epoch(&record);
        epochs.push(record);
        if stopper.should_stop(epoch) {
            stop = StopReason::EarlyStop;
            break;
        }
    }
    let log = TrainLog {
        epochs,
        best_epoch: stopper.best_epoch(),
        best_val: stopper.best(),
        stop,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { params: best_params, log })
}

/// Train on a prepared dataset's train and validation splits.
pub fn train_dataset(
    config: &TrainConfig,
    data: &PreparedDataset,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    let config = config.for_dataset(data);
    let train_set = samples(data, Split::Train, config.band_grouping)?;
    let val_set = samples(data, Split::Val, config.band_grouping)?;
    train_with(&config, &train_set, &val_set, on_epoch)
}

/// Super-resolve a normalised low-resolution cube. Cubes whose original band
/// count differs from the model width are padded and processed in groups,
/// which needs a model of the standard group width. The result holds the
/// original bands only, clamped to `[0, 1]`.
pub fn super_resolve(params: &DdsrParams<f32>, lr: &HyperCube) -> Result<HyperCube> {
    let c = params.config().channels;
    let lr = lr.strip_padding();
    let groups = if lr.bands() == c {
        vec![lr.clone()]
    } else if c == GROUP_SIZE {
        group_bands(&pad_bands(&lr, pad_target(lr.bands(), c), c)?, c)?
    } else {
        return shape_err(format!(
            "cube has {} bands; a model of width {c} needs exactly {c} bands or the {GROUP_SIZE}-band grouping protocol",
            lr.bands()
        ));
    };
    let mut outputs = Vec::with_capacity(groups.len());
    for g in &groups {
        let sr = params.predict(&g.to_tensor())?;
        outputs.push(HyperCube::from_tensor(lr.name.clone(), &sr, 0)?);
    }
    Ok(ungroup(&outputs, lr.bands())?.clamp(0.0, 1.0))
}

/// Bilinear upsampling of every band, clamped to `[0, 1]`.
pub fn bilinear_baseline(lr: &HyperCube, scale: usize) -> Result<HyperCube> {
    let up = ops::bilinear_upsample(&lr.to_tensor(), scale)?;
    Ok(HyperCube::from_tensor(lr.name.clone(), &up, 0)?.clamp(0.0, 1.0))
}

/// Bicubic upsampling of every band, clamped to `[0, 1]`.
pub fn bicubic_baseline(lr: &HyperCube, scale: usize) -> Result<HyperCube> {
    Ok(bicubic_upsample(lr, scale)?.clamp(0.0, 1.0))
}

/// Test-split metrics of a model and of the two interpolation baselines,
/// averaged over test patches, on original bands only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub model: MetricReport,
    pub bicubic: MetricReport,
    pub bilinear: MetricReport,
}

impl Evaluation {
    pub fn to_text(&self) -> String {
        let mut out = self.model.to_text();
        let _ = writeln!(out, "{}", self.model.metrics_line());
        let _ = writeln!(out, "BASELINE bicubic {}", self.bicubic.kv_line());
        let _ = writeln!(out, "BASELINE bilinear {}", self.bilinear.kv_line());
        out
    }
}

pub fn evaluate(params: &DdsrParams<f32>, data: &PreparedDataset) -> Result<Evaluation> {
    let scale = data.spec.scale;
    if params.config().scale != scale {
        return shape_err(format!(
            "model scale {} does not match dataset scale {scale}",
            params.config().scale
        ));
    }
    let patches = data.patches(Split::Test)?;
    if patches.is_empty() {
        return Err(Error::InvalidArgument("dataset has no test patches".into()));
    }
    let (mut model, mut bicubic, mut bilinear) = (Vec::new(), Vec::new(), Vec::new());
    for p in &patches {
        let lr = p.lr.strip_padding();
        let hr = p.hr.strip_padding();
        model.push(MetricReport::compute(&super_resolve(params, &lr)?, &hr)?);
        bicubic.push(MetricReport::compute(&bicubic_baseline(&lr, scale)?, &hr)?);
        bilinear.push(MetricReport::compute(&bilinear_baseline(&lr, scale)?, &hr)?);
    }
    let mean = |r: &[MetricReport]| MetricReport::mean(r).expect("non-empty");
    Ok(Evaluation { model: mean(&model), bicubic: mean(&bicubic), bilinear: mean(&bilinear) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: Ablation,
    pub param_count: usize,
    pub epochs: usize,
    pub evaluation: Evaluation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, variant: Ablation) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<32} {:>8} {:>7} {:>10} {:>8} {:>8}\n",
            "variant", "params", "epochs", "mpsnr", "sam", "mssim"
        );
        for r in &self.rows {
            let m = &r.evaluation.model;
            let _ = writeln!(
                out,
                "{:<32} {:>8} {:>7} {:>10.4} {:>8.4} {:>8.4}",
                r.variant.label(),
                r.param_count,
                r.epochs,
                m.mpsnr,
                m.sam,
                m.mssim
            );
        }
        if let Some(first) = self.rows.first() {
            let b = &first.evaluation.bicubic;
            let _ = writeln!(out, "{:<32} {:>8} {:>7} {:>10.4} {:>8.4} {:>8.4}", "Bicubic", 0, 0, b.mpsnr, b.sam, b.mssim);
        }
        out
    }
}

/// Train and evaluate every ablation variant with the same seed.
pub fn run_ablation(
    base: &TrainConfig,
    data: &PreparedDataset,
    mut progress: impl FnMut(Ablation, &EpochRecord),
) -> Result<AblationTable> {
    let mut rows = Vec::with_capacity(Ablation::ALL.len());
    for variant in Ablation::ALL {
        let config = variant.apply(base);
        let outcome = train_dataset(&config, data, |e| progress(variant, e))?;
        rows.push(AblationRow {
            variant,
            param_count: outcome.params.param_count(),
            epochs: outcome.log.epochs.len(),
            evaluation: evaluate(&outcome.params, data)?,
        });
    }
    Ok(AblationTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{degrade, DatasetSpec};

    #[test]
    fn early_stopping_arithmetic() {
        let mut s = EarlyStopping::new(200, 1e-7);
        assert!(s.observe(1, 0.5));
        let mut stopped = None;
        for epoch in 2..=1000 {
            assert!(!s.observe(epoch, 0.5));
            if s.should_stop(epoch) {
                stopped = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped, Some(201));
        assert!(!s.observe(300, 0.5 - 5e-8));
        assert!(s.observe(301, 0.4));
        assert_eq!(s.best_epoch(), 301);
    }

    #[test]
    fn config_round_trip_and_validation() {
        let mut c = TrainConfig::default();
        c.seed = 9;
        c.model.use_wavelet_net = false;
        let back = TrainConfig::from_key_values(&c.to_key_values()).unwrap();
        assert_eq!(back, c);
        c.patience = c.max_epochs;
        assert!(c.validate().is_err());
        let mut kv = KeyValues::new();
        kv.set("bogus", 1);
        assert!(TrainConfig::from_key_values(&kv).is_err());
    }

    #[test]
    fn ablation_flags() {
        for a in Ablation::ALL {
            assert_eq!(Ablation::parse(a.flag()).unwrap(), a);
        }
        assert!(Ablation::parse("no-such").is_err());
        let base = TrainConfig::default();
        assert!(!Ablation::NoWaveletNet.apply(&base).model.use_wavelet_net);
        assert_eq!(Ablation::NoHybridLoss.apply(&base).weights, LossWeights::reconstruction_only());
    }

    fn tiny_samples(n: usize, channels: usize) -> Vec<Sample> {
        (0..n)
            .map(|k| {
                let hr = HyperCube::from_fn("t", channels, 8, 8, |b, y, x| {
                    0.5 + 0.4 * ((y as f32 * 0.7 + x as f32 * 0.3 + b as f32 * 0.2 + k as f32).sin())
                });
                Sample::from_cubes(&degrade(&hr, 2).unwrap(), &hr)
            })
            .collect()
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            lr: 1e-3,
            max_epochs: 6,
            patience: 3,
            model: ModelConfig { channels: 3, hidden: 4, scale: 2, ..ModelConfig::default() },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic_and_keeps_best() {
        let (tr, va) = (tiny_samples(5, 3), tiny_samples(2, 3));
        let a = train(&tiny_config(), &tr, &va).unwrap();
        let b = train(&tiny_config(), &tr, &va).unwrap();
        assert_eq!(a.log.to_text(), b.log.to_text());
        assert_eq!(a.params, b.params);
        let best = mean_loss(&a.params, &va, &tiny_config()).unwrap().total;
        assert!((best - a.log.best_val).abs() < 1e-9);
        assert!(a.log.to_text().starts_with("EPOCH 1 train="));
    }

    #[test]
    fn divergence_is_reported() {
        let mut cfg = tiny_config();
        cfg.lr = 1e30;
        let (tr, va) = (tiny_samples(5, 3), tiny_samples(1, 3));
        match train(&cfg, &tr, &va) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let err = train(&tiny_config(), &tiny_samples(2, 4), &tiny_samples(1, 4)).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn zeroed_model_matches_bilinear() {
        let raw = HyperCube::from_fn("z", 40, 32, 32, |b, y, x| ((b + 2 * y + 3 * x) % 17) as f32);
        let spec = DatasetSpec::new(16, 2);
        let data = PreparedDataset::prepare(&raw, &spec).unwrap();
        let mut params = init_params::<f32>(&ModelConfig::with_scale(2), 1).unwrap();
        params.zero_all();
        let e = evaluate(&params, &data).unwrap();
        assert!(e.model.max_abs_diff(&e.bilinear) < 1e-6, "{:?} vs {:?}", e.model, e.bilinear);
        let text = e.to_text();
        assert!(text.contains("\nMETRICS mpsnr="));
        assert!(text.contains("BASELINE bicubic mpsnr="));
    }

    #[test]
    fn identity_scale_is_a_pass_through() {
        let lr = HyperCube::from_fn("p", 35, 12, 12, |b, y, x| ((b * 5 + y * 3 + x) % 13) as f32 / 13.0 + 0.01);
        let mut params = init_params::<f32>(&ModelConfig::with_scale(1), 3).unwrap();
        params.zero_all();
        let sr = super_resolve(&params, &lr).unwrap();
        let rep = MetricReport::compute(&sr, &lr).unwrap();
        assert!(rep.mpsnr > 99.0);
        assert!(rep.sam < 1e-2);
    }
}
