//! The dual-domain super-resolution network.
//!
//! ```text
//! x ──► Conv1 ─► ReLU ─► Conv2 ─► U ─► Conv3 ─┐
//! │                                           + ─► spatial ─► DWT ─┬─ LL ──► low branch ──┐
//! └──────────────────────────► U ─────────────┘                    └─ LH/HL/HH ► high ────┴► IDWT ─► sr
//! ```
//!
//! `U` is bilinear upsampling by the scale factor. Each branch is a residual
//! block `S + ConvB(ReLU(ConvA(S)))`; the high-frequency branch is one weight
//! set shared by the three detail subbands unless sharing is switched off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autograd::{Graph, ParamId, ParamStore, Var};
use crate::error::{shape_err, Error, Result};
use crate::tensor::{ops::KERNEL, Real, Shape, Tensor};
use crate::wavelet::Subband;

/// Channels per spectral band group.
pub const GROUP_SIZE: usize = 35;
pub const DEFAULT_HIDDEN: usize = 32;
/// Factor 1 is a pass-through used for pipeline sanity checks.
pub const SUPPORTED_SCALES: [usize; 4] = [1, 2, 4, 8];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub channels: usize,
    pub hidden: usize,
    pub scale: usize,
    pub use_spatial_net: bool,
    pub use_wavelet_net: bool,
    pub share_high_branch: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: GROUP_SIZE,
            hidden: DEFAULT_HIDDEN,
            scale: 4,
            use_spatial_net: true,
            use_wavelet_net: true,
            share_high_branch: true,
        }
    }
}

impl ModelConfig {
    pub fn with_scale(scale: usize) -> Self {
        Self { scale, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument(format!(
                "channels ({}) and hidden width ({}) must be positive",
                self.channels, self.hidden
            )));
        }
        if !SUPPORTED_SCALES.contains(&self.scale) {
            return Err(Error::InvalidArgument(format!(
                "scale factor {} not in {SUPPORTED_SCALES:?}",
                self.scale
            )));
        }
        Ok(())
    }

    /// Recover the architecture from the parameter names and shapes of a
    /// store; the scale factor is not part of the weights and must be given.
    pub fn infer<T: Real>(store: &ParamStore<T>, scale: usize) -> Result<Self> {
        let shape_of = |name: &str| store.find(name).map(|id| store.get(id).value.shape());
        let use_spatial_net = shape_of("spatial.conv1.weight").is_some();
        let use_wavelet_net = shape_of("low.conv_a.weight").is_some();
        let share_high_branch = shape_of("high.conv_a.weight").is_some() || !use_wavelet_net;
        let first = ["spatial.conv1.weight", "low.conv_a.weight"]
            .into_iter()
            .find_map(shape_of);
        let Some(w) = first else {
            return Err(Error::Format("checkpoint holds neither a spatial nor a wavelet network".into()));
        };
        let config = Self {
            channels: w.channels,
            hidden: w.batch,
            scale,
            use_spatial_net,
            use_wavelet_net,
            share_high_branch,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct ConvIds {
    weight: ParamId,
    bias: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct BranchIds {
    conv_a: ConvIds,
    conv_b: ConvIds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SpatialIds {
    conv1: ConvIds,
    conv2: ConvIds,
    conv3: ConvIds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HighIds {
    Shared(BranchIds),
    PerBand([BranchIds; 3]),
}

impl HighIds {
    fn for_band(&self, k: usize) -> BranchIds {
        match self {
            HighIds::Shared(b) => *b,
            HighIds::PerBand(bs) => bs[k],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layout {
    spatial: Option<SpatialIds>,
    low: Option<BranchIds>,
    high: Option<HighIds>,
}

/// `(name, cin, cout)` for every convolution the configuration needs, in
/// canonical order.
fn conv_table(config: &ModelConfig) -> Vec<(String, usize, usize)> {
    let (c, h) = (config.channels, config.hidden);
    let mut table = Vec::new();
    if config.use_spatial_net {
        table.push(("spatial.conv1".to_string(), c, h));
        table.push(("spatial.conv2".to_string(), h, h));
        table.push(("spatial.conv3".to_string(), h, c));
    }
    if config.use_wavelet_net {
        let mut branch = |prefix: String| {
            table.push((format!("{prefix}.conv_a"), c, h));
            table.push((format!("{prefix}.conv_b"), h, c));
        };
        branch("low".into());
        if config.share_high_branch {
            branch("high".into());
        } else {
            for band in Subband::DETAILS {
                branch(format!("high.{}", band.name()));
            }
        }
    }
    table
}

fn weight_shape(cin: usize, cout: usize) -> Shape {
    Shape::new(cout, cin, KERNEL, KERNEL)
}

fn bias_shape(cout: usize) -> Shape {
    Shape::new(1, cout, 1, 1)
}

impl Layout {
    fn resolve<T: Real>(config: &ModelConfig, store: &ParamStore<T>) -> Result<Self> {
        let table = conv_table(config);
        let expected = 2 * table.len();
        let lookup = |name: &str, cin: usize, cout: usize| -> Result<ConvIds> {
            let get = |suffix: &str, shape: Shape| -> Result<ParamId> {
                let full = format!("{name}.{suffix}");
                let id = store
                    .find(&full)
                    .ok_or_else(|| Error::Shape(format!("parameter {full} is missing")))?;
                let actual = store.get(id).value.shape();
                if actual != shape {
                    return shape_err(format!("parameter {full} has shape {actual}, expected {shape}"));
                }
                Ok(id)
            };
            Ok(ConvIds { weight: get("weight", weight_shape(cin, cout))?, bias: get("bias", bias_shape(cout))? })
        };

        let mut convs = Vec::with_capacity(table.len());
        for (name, cin, cout) in &table {
            convs.push(lookup(name, *cin, *cout)?);
        }
        if store.len() != expected {
            let known: Vec<String> =
                table.iter().flat_map(|(n, _, _)| [format!("{n}.weight"), format!("{n}.bias")]).collect();
            let extra = store
                .iter()
                .find(|p| !known.contains(&p.name))
                .map(|p| p.name.clone())
                .unwrap_or_default();
            return shape_err(format!("unexpected parameter {extra} for this configuration"));
        }

        let mut it = convs.into_iter();
        let spatial = config.use_spatial_net.then(|| SpatialIds {
            conv1: it.next().unwrap(),
            conv2: it.next().unwrap(),
            conv3: it.next().unwrap(),
        });
        let mut branch = || BranchIds { conv_a: it.next().unwrap(), conv_b: it.next().unwrap() };
        let (low, high) = if config.use_wavelet_net {
            let low = branch();
            let high = if config.share_high_branch {
                HighIds::Shared(branch())
            } else {
                HighIds::PerBand([branch(), branch(), branch()])
            };
            (Some(low), Some(high))
        } else {
            (None, None)
        };
        Ok(Self { spatial, low, high })
    }
}

/// Trainable weights of one network together with its configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DdsrParams<T> {
    config: ModelConfig,
    store: ParamStore<T>,
    layout: Layout,
}

/// Every value the loss needs from one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutputs<T> {
    pub sr: Tensor<T>,
    pub spatial: Tensor<T>,
    pub ll_refined: Tensor<T>,
    /// Refined `LH`, `HL`, `HH`.
    pub high_refined: [Tensor<T>; 3],
}

/// Graph handles of [`ForwardOutputs`].
#[derive(Clone, Copy, Debug)]
pub struct ForwardVars {
    pub sr: Var,
    pub spatial: Var,
    pub ll_refined: Var,
    pub high_refined: [Var; 3],
}

impl ForwardVars {
    pub fn collect<T: Real>(&self, g: &Graph<T>) -> ForwardOutputs<T> {
        ForwardOutputs {
            sr: g.value(self.sr).clone(),
            spatial: g.value(self.spatial).clone(),
            ll_refined: g.value(self.ll_refined).clone(),
            high_refined: self.high_refined.map(|v| g.value(v).clone()),
        }
    }
}

/// Weights uniform in `±sqrt(1 / fan_in)` with `fan_in = cin * 9`, biases
/// zero. Deterministic for a given seed.
pub fn init_params<T: Real>(config: &ModelConfig, seed: u64) -> Result<DdsrParams<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    for (name, cin, cout) in conv_table(config) {
        let bound = (1.0 / (cin * KERNEL * KERNEL) as f64).sqrt();
        let shape = weight_shape(cin, cout);
        let data = (0..shape.numel()).map(|_| T::from_f64_lossy(rng.gen_range(-bound..bound))).collect();
        store.add(format!("{name}.weight"), Tensor::from_vec(shape, data)?)?;
        store.add(format!("{name}.bias"), Tensor::zeros(bias_shape(cout)))?;
    }
    DdsrParams::from_store(*config, store)
}

pub fn param_count<T: Real>(params: &DdsrParams<T>) -> usize {
    params.store.numel()
}

impl<T: Real> DdsrParams<T> {
    /// Bind a parameter store to a configuration, checking every expected
    /// tensor is present with the right shape.
    pub fn from_store(config: ModelConfig, store: ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::resolve(&config, &store)?;
        Ok(Self { config, store, layout })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn into_store(self) -> ParamStore<T> {
        self.store
    }

    pub fn param_count(&self) -> usize {
        self.store.numel()
    }

    /// Same weights, different scale factor.
    pub fn with_scale(mut self, scale: usize) -> Result<Self> {
        self.config.scale = scale;
        self.config.validate()?;
        Ok(self)
    }

    pub fn cast<U: Real>(&self) -> DdsrParams<U> {
        DdsrParams { config: self.config, store: self.store.cast(), layout: self.layout }
    }

    /// Set every weight and bias to zero, reducing the network to bilinear
    /// upsampling.
    pub fn zero_all(&mut self) {
        for p in self.store.iter_mut() {
            p.value.fill(T::zero());
        }
    }

    /// Zero only the wavelet-branch weights, so `sr` equals the spatial output.
    pub fn zero_wavelet_branches(&mut self) {
        for p in self.store.iter_mut() {
            if p.name.starts_with("low.") || p.name.starts_with("high.") {
                p.value.fill(T::zero());
            }
        }
    }

    /// Copy of these weights with the high-frequency branch unshared
    /// (`share = false`) or shared (`share = true`, taking the `LH` copy).
    pub fn with_high_sharing(&self, share: bool) -> Result<Self> {
        if !self.config.use_wavelet_net || self.config.share_high_branch == share {
            return Ok(self.clone());
        }
        let mut config = self.config;
        config.share_high_branch = share;
        let source_name = |name: &str| -> String {
            match name.strip_prefix("high.") {
                Some(rest) if share => format!("high.lh.{rest}"),
                Some(rest) => format!("high.{}", rest.split_once('.').map_or(rest, |(_, r)| r)),
                None => name.to_string(),
            }
        };
        let mut store = ParamStore::new();
        for (conv, _, _) in conv_table(&config) {
            for suffix in ["weight", "bias"] {
                let name = format!("{conv}.{suffix}");
                let id = self.store.find(&source_name(&name)).expect("layout was validated");
                store.add(name, self.store.get(id).value.clone())?;
            }
        }
        Self::from_store(config, store)
    }

    fn conv(&self, g: &mut Graph<T>, ids: ConvIds, x: Var) -> Result<Var> {
        let w = g.param(&self.store, ids.weight);
        let b = g.param(&self.store, ids.bias);
        g.conv2d(x, w, b)
    }

    fn residual_block(&self, g: &mut Graph<T>, ids: BranchIds, x: Var) -> Result<Var> {
        let a = self.conv(g, ids.conv_a, x)?;
        let a = g.relu(a);
        let b = self.conv(g, ids.conv_b, a)?;
        g.add(x, b)
    }

    /// Spatial path: `Conv3(U(Conv2(ReLU(Conv1(x))))) + U(x)`, or just
    /// `U(x)` when the spatial network is disabled.
    pub fn spatial_graph(&self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let s = g.value(x).shape();
        if s.channels != self.config.channels {
            return shape_err(format!(
                "input has {} channels, the model expects {}",
                s.channels, self.config.channels
            ));
        }
        let skip = g.upsample(x, self.config.scale)?;
        let Some(ids) = self.layout.spatial else { return Ok(skip) };
        let f = self.conv(g, ids.conv1, x)?;
        let f = g.relu(f);
        let f = self.conv(g, ids.conv2, f)?;
        let up = g.upsample(f, self.config.scale)?;
        let main = self.conv(g, ids.conv3, up)?;
        g.add(main, skip)
    }

    pub fn forward_graph(&self, g: &mut Graph<T>, x: Var) -> Result<ForwardVars> {
        let spatial = self.spatial_graph(g, x)?;
        let [ll, lh, hl, hh] = g.dwt(spatial)?;
        let details = [lh, hl, hh];
        let (Some(low), Some(high)) = (self.layout.low, self.layout.high) else {
            return Ok(ForwardVars { sr: spatial, spatial, ll_refined: ll, high_refined: details });
        };
        let ll_refined = self.residual_block(g, low, ll)?;
        let mut high_refined = details;
        for (k, band) in details.into_iter().enumerate() {
            high_refined[k] = self.residual_block(g, high.for_band(k), band)?;
        }
        let sr = g.idwt([ll_refined, high_refined[0], high_refined[1], high_refined[2]])?;
        Ok(ForwardVars { sr, spatial, ll_refined, high_refined })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<ForwardOutputs<T>> {
        let mut g = Graph::new();
        let xv = g.input(x.clone());
        Ok(self.forward_graph(&mut g, xv)?.collect(&g))
    }

    /// Super-resolved output only.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.input(x.clone());
        let out = self.forward_graph(&mut g, xv)?;
        Ok(g.value(out.sr).clone())
    }

    pub fn spatial_net_forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.input(x.clone());
        let out = self.spatial_graph(&mut g, xv)?;
        Ok(g.value(out).clone())
    }
}
