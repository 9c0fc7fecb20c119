use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::AdamW;
use super::tensor::{axpy, dot};
use super::Tensor;
use crate::error::{Error, Result};
use crate::gate::{self, preset, ArcGateParams, Preset, N_PARAMS};
use crate::zoo::{self, ActivationKind};

pub(crate) const DENSE_STREAM: u64 = 0;
pub(crate) const SHUFFLE_STREAM: u64 = 1;
pub(crate) const GATE_STREAM: u64 = 2;
pub(crate) const NOISE_STREAM: u64 = 3;

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn fresh_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Ownership of activation parameters across the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    /// Frozen at initialization.
    Fixed,
    /// One parameter set shared by every activation layer.
    GlobalShared,
    /// One parameter set per activation layer.
    LayerWise,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Self::Fixed, Self::GlobalShared, Self::LayerWise];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::GlobalShared => "global_shared",
            Self::LayerWise => "layer_wise",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "global_shared" | "global" => Ok(Self::GlobalShared),
            "layer_wise" | "layerwise" => Ok(Self::LayerWise),
            _ => Err(Error::InvalidArgument(format!("unknown granularity {s:?}"))),
        }
    }
}

/// How activation layers start out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    SoftRelu,
    Identity,
    Random,
    /// Plain ReLU layers; no gate parameters at all.
    ReluBaseline,
}

impl InitStrategy {
    pub const ALL: [InitStrategy; 4] = [
        Self::ReluBaseline,
        Self::Identity,
        Self::Random,
        Self::SoftRelu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SoftRelu => "soft_relu",
            Self::Identity => "identity",
            Self::Random => "random",
            Self::ReluBaseline => "relu_baseline",
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft_relu" => Ok(Self::SoftRelu),
            "identity" => Ok(Self::Identity),
            "random" => Ok(Self::Random),
            "relu_baseline" | "relu" => Ok(Self::ReluBaseline),
            _ => Err(Error::InvalidArgument(format!("unknown init strategy {s:?}"))),
        }
    }
}

/// Layer widths of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub n_classes: usize,
}

impl ModelSpec {
    /// 784 -> 256 -> 128 -> 64 -> `n_classes`.
    pub fn desk_scale(n_classes: usize) -> Self {
        Self {
            input_dim: 784,
            hidden: vec![256, 128, 64],
            n_classes,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.n_classes == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "model widths must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform fan-in scaled init, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero bias.
    fn kaiming(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let mut out = Tensor::zeros(x.rows(), self.outputs);
        for b in 0..x.rows() {
            let xb = x.row(b);
            let ob = out.row_mut(b);
            for (j, o) in ob.iter_mut().enumerate() {
                *o = self.bias[j] + dot(&self.weights[j * self.inputs..(j + 1) * self.inputs], xb);
            }
        }
        out
    }
}

/// Where an ArcGate layer reads its parameters from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Frozen(ArcGateParams),
    Shared,
    Owned(ArcGateParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationMode {
    /// A fixed reference activation; the gate is bypassed entirely.
    Baseline(ActivationKind),
    Gate(Gate),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationLayer {
    pub width: usize,
    pub mode: ActivationMode,
}

impl ActivationLayer {
    pub fn granularity(&self) -> Option<Granularity> {
        match self.mode {
            ActivationMode::Baseline(_) => None,
            ActivationMode::Gate(Gate::Frozen(_)) => Some(Granularity::Fixed),
            ActivationMode::Gate(Gate::Shared) => Some(Granularity::GlobalShared),
            ActivationMode::Gate(Gate::Owned(_)) => Some(Granularity::LayerWise),
        }
    }

    pub fn baseline(&self) -> Option<ActivationKind> {
        match self.mode {
            ActivationMode::Baseline(k) => Some(k),
            ActivationMode::Gate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Activation(ActivationLayer),
}

impl Layer {
    fn width_in(&self) -> usize {
        match self {
            Layer::Dense(d) => d.inputs,
            Layer::Activation(a) => a.width,
        }
    }

    fn width_out(&self) -> usize {
        match self {
            Layer::Dense(d) => d.outputs,
            Layer::Activation(a) => a.width,
        }
    }
}

/// Inputs seen by every layer during one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Tensor>,
    version: u64,
}

impl ForwardCache {
    pub fn batch_rows(&self) -> usize {
        self.inputs.first().map_or(0, Tensor::rows)
    }

    /// Input seen by layer `i` during the forward pass.
    pub fn layer_input(&self, i: usize) -> Option<&Tensor> {
        self.inputs.get(i)
    }
}

/// Identifies a learnable gate parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateSlot {
    /// Owned by the activation layer at this position in the layer list.
    Layer(usize),
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient with respect to raw gate storage of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct GateGradSlot {
    pub slot: GateSlot,
    pub raw: [f64; N_PARAMS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// One entry per dense layer, in depth order.
    pub dense: Vec<DenseGrad>,
    /// Learnable gate slots in depth order; the shared slot comes last.
    pub gates: Vec<GateGradSlot>,
}

/// Dense layers interleaved with activation layers, ending in class logits.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<Layer>,
    shared: Option<ArcGateParams>,
    version: u64,
}

fn random_gate(rng: &mut ChaCha8Rng) -> Result<ArcGateParams> {
    let a = rng.random_range(0.5..8.0);
    let p = rng.random_range(0.5..8.0);
    let c = rng.random_range(-0.5..0.5);
    let alpha = rng.random_range(0.5..1.5);
    let beta = rng.random_range(-0.5..0.5);
    let gamma = rng.random_range(-0.5..0.5);
    let delta = rng.random_range(-0.5..0.5);
    ArcGateParams::from_effective(a, c, p, alpha, beta, gamma, delta)
}

/// Equality over layers and shared parameters; the cache version is ignored.
impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.shared == other.shared
    }
}

impl Mlp {
    /// Builds and initializes a network. Dense weights depend only on `seed`
    /// and the widths, so variants that differ in activation setup share them.
    pub fn new(
        spec: &ModelSpec,
        init: InitStrategy,
        granularity: Granularity,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        let mut dense_rng = ChaCha8Rng::seed_from_u64(seed);
        dense_rng.set_stream(DENSE_STREAM);
        let mut gate_rng = ChaCha8Rng::seed_from_u64(seed);
        gate_rng.set_stream(GATE_STREAM);

        let draw = |rng: &mut ChaCha8Rng| -> Result<ArcGateParams> {
            match init {
                InitStrategy::SoftRelu | InitStrategy::ReluBaseline => {
                    preset(Preset::SoftReluInit)
                }
                InitStrategy::Identity => preset(Preset::Identity),
                InitStrategy::Random => random_gate(rng),
            }
        };

        let baseline = init == InitStrategy::ReluBaseline;
        let shared = if !baseline && granularity == Granularity::GlobalShared {
            Some(draw(&mut gate_rng)?)
        } else {
            None
        };

        let mut layers = Vec::new();
        let mut width = spec.input_dim;
        for &h in &spec.hidden {
            layers.push(Layer::Dense(Dense::kaiming(width, h, &mut dense_rng)));
            let mode = if baseline {
                ActivationMode::Baseline(ActivationKind::Relu)
            } else {
                ActivationMode::Gate(match granularity {
                    Granularity::Fixed => Gate::Frozen(draw(&mut gate_rng)?),
                    Granularity::GlobalShared => Gate::Shared,
                    Granularity::LayerWise => Gate::Owned(draw(&mut gate_rng)?),
                })
            };
            layers.push(Layer::Activation(ActivationLayer { width: h, mode }));
            width = h;
        }
        layers.push(Layer::Dense(Dense::kaiming(width, spec.n_classes, &mut dense_rng)));
        Self::from_parts(layers, shared)
    }

    /// Assembles a network from explicit layers, checking shape compatibility.
    pub fn from_parts(layers: Vec<Layer>, shared: Option<ArcGateParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].width_out() != w[1].width_in() {
                return Err(Error::Shape(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    w[0].width_out(),
                    i + 1,
                    w[1].width_in()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if let Layer::Dense(d) = l {
                if d.weights.len() != d.inputs * d.outputs || d.bias.len() != d.outputs {
                    return Err(Error::Shape(format!("dense layer {i} storage size")));
                }
            }
        }
        let uses_shared = layers.iter().any(|l| {
            matches!(
                l,
                Layer::Activation(ActivationLayer {
                    mode: ActivationMode::Gate(Gate::Shared),
                    ..
                })
            )
        });
        if uses_shared != shared.is_some() {
            return Err(Error::Contract(
                "shared parameters must exist exactly when a layer reads them".into(),
            ));
        }
        Ok(Self {
            layers,
            shared,
            version: fresh_version(),
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access to the layers; invalidates outstanding forward caches.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        self.version = fresh_version();
        &mut self.layers
    }

    pub fn shared(&self) -> Option<&ArcGateParams> {
        self.shared.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].width_in()
    }

    pub fn n_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].width_out()
    }

    /// Parameters the gate at `layer` evaluates with, or `None` for dense or
    /// baseline layers.
    pub fn gate_params(&self, layer: usize) -> Option<ArcGateParams> {
        match self.layers.get(layer)? {
            Layer::Activation(ActivationLayer {
                mode: ActivationMode::Gate(g),
                ..
            }) => match g {
                Gate::Frozen(p) | Gate::Owned(p) => Some(*p),
                Gate::Shared => self.shared,
            },
            _ => None,
        }
    }

    /// `(layer index, layer)` for every activation layer, in depth order.
    pub fn activation_layers(&self) -> impl Iterator<Item = (usize, &ActivationLayer)> {
        self.layers.iter().enumerate().filter_map(|(i, l)| match l {
            Layer::Activation(a) => Some((i, a)),
            Layer::Dense(_) => None,
        })
    }

    /// Common granularity of the gate layers; `None` when there are no gates.
    pub fn granularity(&self) -> Option<Granularity> {
        let mut g = None;
        for (_, a) in self.activation_layers() {
            match (g, a.granularity()) {
                (_, None) => {}
                (None, Some(x)) => g = Some(x),
                (Some(prev), Some(x)) if prev != x => return None,
                _ => {}
            }
        }
        g
    }

    /// Number of trainable activation scalars, counted by walking the layers.
    pub fn learnable_activation_params(&self) -> usize {
        let owned = self
            .activation_layers()
            .filter(|(_, a)| matches!(a.mode, ActivationMode::Gate(Gate::Owned(_))))
            .count();
        (owned + usize::from(self.shared.is_some())) * N_PARAMS
    }

    pub fn dense_param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.weights.len() + d.bias.len(),
                Layer::Activation(_) => 0,
            })
            .sum()
    }

    fn check_input(&self, batch: &Tensor) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} columns, model expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn activate(&self, index: usize, layer: &ActivationLayer, x: &Tensor) -> Result<Tensor> {
        let mut out = Tensor::zeros(x.rows(), x.cols());
        match layer.mode {
            ActivationMode::Baseline(kind) => {
                for (o, &v) in out.data_mut().iter_mut().zip(x.data()) {
                    *o = zoo::act(kind, v)?;
                }
            }
            ActivationMode::Gate(_) => {
                let params = self.gate_params(index).expect("gate layer has parameters");
                gate::eval_f_batch_into(x.data(), &params, out.data_mut())?;
            }
        }
        Ok(out)
    }

    /// Class logits for a batch, keeping every layer input for [`Mlp::backward`].
    pub fn forward(&self, batch: &Tensor) -> Result<(Tensor, ForwardCache)> {
        self.check_input(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = batch.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let y = match layer {
                Layer::Dense(d) => d.forward(&x),
                Layer::Activation(a) => self.activate(i, a, &x)?,
            };
            inputs.push(x);
            x = y;
        }
        if !x.all_finite() {
            return Err(Error::Domain {
                what: "non-finite logits",
                value: x.data().iter().copied().find(|v| !v.is_finite()).unwrap_or(f64::NAN),
            });
        }
        Ok((
            x,
            ForwardCache {
                inputs,
                version: self.version,
            },
        ))
    }

    /// Forward pass without retaining a cache.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        self.check_input(batch)?;
        let mut x = batch.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            x = match layer {
                Layer::Dense(d) => d.forward(&x),
                Layer::Activation(a) => self.activate(i, a, &x)?,
            };
        }
        Ok(x)
    }

    /// Backpropagates `grad_logits` (the loss gradient with respect to the
    /// logits) through the cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &Tensor) -> Result<Gradients> {
        if cache.version != self.version || cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache(
                "cache was not produced by this model state".into(),
            ));
        }
        if grad_logits.shape() != (cache.batch_rows(), self.n_classes()) {
            return Err(Error::Shape(format!(
                "logit gradient {:?} does not match batch of {} x {}",
                grad_logits.shape(),
                cache.batch_rows(),
                self.n_classes()
            )));
        }

        let mut dense = Vec::new();
        let mut gates = Vec::new();
        let mut shared_acc = [0.0; N_PARAMS];
        let mut g = grad_logits.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[i];
            match layer {
                Layer::Dense(d) => {
                    let mut dw = vec![0.0; d.weights.len()];
                    let mut db = vec![0.0; d.outputs];
                    for b in 0..x.rows() {
                        let (xb, gb) = (x.row(b), g.row(b));
                        for j in 0..d.outputs {
                            if gb[j] != 0.0 {
                                axpy(gb[j], xb, &mut dw[j * d.inputs..(j + 1) * d.inputs]);
                            }
                            db[j] += gb[j];
                        }
                    }
                    if i > 0 {
                        let mut dx = Tensor::zeros(x.rows(), d.inputs);
                        for b in 0..x.rows() {
                            let gb = g.row(b);
                            let dxb = dx.row_mut(b);
                            for j in 0..d.outputs {
                                if gb[j] != 0.0 {
                                    axpy(gb[j], &d.weights[j * d.inputs..(j + 1) * d.inputs], dxb);
                                }
                            }
                        }
                        g = dx;
                    }
                    dense.push(DenseGrad {
                        weights: dw,
                        bias: db,
                    });
                }
                Layer::Activation(a) => {
                    let mut dx = Tensor::zeros(x.rows(), x.cols());
                    match a.mode {
                        ActivationMode::Baseline(kind) => {
                            for ((d, &v), &go) in dx.data_mut().iter_mut().zip(x.data()).zip(g.data())
                            {
                                *d = go * zoo::act_grad(kind, v)?;
                            }
                        }
                        ActivationMode::Gate(gate_kind) => {
                            let params = self.gate_params(i).expect("gate layer has parameters");
                            let resolved = params.resolve()?;
                            let mut acc = [0.0; N_PARAMS];
                            for ((d, &v), &go) in dx.data_mut().iter_mut().zip(x.data()).zip(g.data())
                            {
                                let gg = gate::grad_resolved(v, &resolved)?;
                                *d = go * gg.d_x;
                                for (s, pk) in acc.iter_mut().zip(gg.params()) {
                                    *s += go * pk;
                                }
                            }
                            let chain = params.raw_chain();
                            for (s, c) in acc.iter_mut().zip(chain) {
                                *s *= c;
                            }
                            match gate_kind {
                                Gate::Frozen(_) => {}
                                Gate::Owned(_) => gates.push(GateGradSlot {
                                    slot: GateSlot::Layer(i),
                                    raw: acc,
                                }),
                                Gate::Shared => {
                                    for (s, v) in shared_acc.iter_mut().zip(acc) {
                                        *s += v;
                                    }
                                }
                            }
                        }
                    }
                    g = dx;
                }
            }
        }
        dense.reverse();
        gates.reverse();
        if self.shared.is_some() {
            gates.push(GateGradSlot {
                slot: GateSlot::Shared,
                raw: shared_acc,
            });
        }
        Ok(Gradients { dense, gates })
    }

    /// One AdamW update over all trainable parameters. Decay applies to dense
    /// weights only; biases and gate parameters are exempt.
    pub fn apply_adamw(&mut self, grads: &Gradients, opt: &mut AdamW) -> Result<()> {
        let n_dense = self
            .layers
            .iter()
            .filter(|l| matches!(l, Layer::Dense(_)))
            .count();
        if grads.dense.len() != n_dense {
            return Err(Error::Shape(format!(
                "{} dense gradients for {n_dense} dense layers",
                grads.dense.len()
            )));
        }
        for (k, dg) in grads.dense.iter().enumerate() {
            check_finite(&format!("dense[{k}].weights"), &dg.weights)?;
            check_finite(&format!("dense[{k}].bias"), &dg.bias)?;
        }
        for slot in &grads.gates {
            check_finite(&format!("gate {:?}", slot.slot), &slot.raw)?;
        }

        opt.begin_step();
        let mut group = 0;
        let mut k = 0;
        for layer in self.layers.iter_mut() {
            if let Layer::Dense(d) = layer {
                let dg = &grads.dense[k];
                if dg.weights.len() != d.weights.len() || dg.bias.len() != d.bias.len() {
                    return Err(Error::Shape(format!("dense gradient {k} size")));
                }
                opt.update(group, &mut d.weights, &dg.weights, true)?;
                opt.update(group + 1, &mut d.bias, &dg.bias, false)?;
                group += 2;
                k += 1;
            }
        }
        for slot in &grads.gates {
            let target = match slot.slot {
                GateSlot::Shared => self.shared.as_mut(),
                GateSlot::Layer(i) => match self.layers.get_mut(i) {
                    Some(Layer::Activation(ActivationLayer {
                        mode: ActivationMode::Gate(Gate::Owned(p)),
                        ..
                    })) => Some(p),
                    _ => None,
                },
            };
            let params = target.ok_or_else(|| {
                Error::Contract(format!("gradient slot {:?} has no learnable gate", slot.slot))
            })?;
            let mut raw = params.to_raw();
            opt.update(group, &mut raw, &slot.raw, false)?;
            *params = ArcGateParams::from_raw(raw);
            group += 1;
        }
        self.version = fresh_version();
        Ok(())
    }
}

fn check_finite(group: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteGradient {
            group: group.to_string(),
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Mean softmax cross-entropy and its gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    let n = logits.rows() as f64;
    let mut grad = Tensor::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for (b, &label) in labels.iter().enumerate() {
        let row = logits.row(b);
        if label >= row.len() {
            return Err(Error::InvalidArgument(format!("label {label} out of range")));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_sum = max + sum.ln();
        loss += log_sum - row[label];
        let gb = grad.row_mut(b);
        for (j, g) in gb.iter_mut().enumerate() {
            *g = (row[j] - log_sum).exp() / n;
        }
        gb[label] -= 1.0 / n;
    }
    Ok((loss / n, grad))
}
